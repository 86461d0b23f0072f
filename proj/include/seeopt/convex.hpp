#pragma once

// Sparse primal-dual interior-point method for smooth convex programs
//
//     minimize    f(x)
//     subject to  g_j(x) <= 0,   A x = b,   l <= x <= u,
//
// where f and every g_j are sums of affine parts and the convex atoms below.
// Linear inequalities are turned into equalities with a bounded slack
// variable, so the reduced Newton system stays as sparse as the atoms are.

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace seeopt::convex {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using LinearExpr = std::vector<std::pair<int, double>>;

/// Value, gradient and row-major Hessian of an atom in its local variables.
struct LocalEval {
    double value = 0.0;
    std::array<double, 3> grad{};
    std::array<double, 9> hess{};
};

/// weight * sum_i (x_i - offset_i)^2 over up to three variables.
struct SquaredNorm {
    std::array<int, 3> idx{};
    std::array<double, 3> offset{};
    int dim = 0;
    double weight = 1.0;

    int arity() const { return dim; }
    int var(int i) const { return idx[i]; }
    LocalEval eval(const double* x) const {
        LocalEval e;
        for (int i = 0; i < dim; ++i) {
            const double d = x[i] - offset[i];
            e.value += weight * d * d;
            e.grad[i] = 2.0 * weight * d;
            e.hess[i * 3 + i] = 2.0 * weight;
        }
        return e;
    }
};

/// weight * ||(x_0, x_1)||^3.
struct NormCubed {
    std::array<int, 2> idx{};
    double weight = 1.0;

    int arity() const { return 2; }
    int var(int i) const { return idx[i]; }
    LocalEval eval(const double* x) const {
        LocalEval e;
        const double r = std::hypot(x[0], x[1]);
        e.value = weight * r * r * r;
        for (int i = 0; i < 2; ++i) {
            e.grad[i] = 3.0 * weight * r * x[i];
        }
        if (r > 0.0) {
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    e.hess[i * 3 + j] = 3.0 * weight * (x[i] * x[j] / r + (i == j ? r : 0.0));
                }
            }
        }
        return e;
    }
};

/// weight * (k0 + k1 * ||(x_0, x_1)||^2) / t for t > 0, with t the third local variable.
struct QuadOverLin {
    std::array<int, 2> idx{};
    int den = 0;
    double k0 = 1.0;
    double k1 = 1.0;
    double weight = 1.0;

    int arity() const { return 3; }
    int var(int i) const { return i < 2 ? idx[i] : den; }
    LocalEval eval(const double* x) const {
        LocalEval e;
        const double t = x[2];
        if (!(t > 0.0)) {
            e.value = std::numeric_limits<double>::quiet_NaN();
            return e;
        }
        const double q = k0 + k1 * (x[0] * x[0] + x[1] * x[1]);
        e.value = weight * q / t;
        for (int i = 0; i < 2; ++i) {
            e.grad[i] = weight * 2.0 * k1 * x[i] / t;
            e.hess[i * 3 + i] = weight * 2.0 * k1 / t;
            e.hess[i * 3 + 2] = e.hess[2 * 3 + i] = -weight * 2.0 * k1 * x[i] / (t * t);
        }
        e.grad[2] = -weight * q / (t * t);
        e.hess[8] = weight * 2.0 * q / (t * t * t);
        return e;
    }
};

/// weight * log2(1 + c / x) for x > 0 (convex and decreasing when c >= 0).
struct Log2InvRatio {
    int idx = 0;
    double c = 0.0;
    double weight = 1.0;

    int arity() const { return 1; }
    int var(int) const { return idx; }
    LocalEval eval(const double* x) const {
        LocalEval e;
        const double u = x[0];
        if (!(u > 0.0)) {
            e.value = std::numeric_limits<double>::quiet_NaN();
            return e;
        }
        const double s = weight / std::numbers::ln2;
        e.value = weight * std::log2(1.0 + c / u);
        e.grad[0] = s * (1.0 / (u + c) - 1.0 / u);
        e.hess[0] = s * (1.0 / (u * u) - 1.0 / ((u + c) * (u + c)));
        return e;
    }
};

/// -weight * log2(1 + c * x) for 1 + c x > 0 (convex for c, weight >= 0).
struct NegLog2Affine {
    int idx = 0;
    double c = 0.0;
    double weight = 1.0;

    int arity() const { return 1; }
    int var(int) const { return idx; }
    LocalEval eval(const double* x) const {
        LocalEval e;
        const double arg = 1.0 + c * x[0];
        if (!(arg > 0.0)) {
            e.value = std::numeric_limits<double>::quiet_NaN();
            return e;
        }
        const double s = weight / std::numbers::ln2;
        e.value = -weight * std::log2(arg);
        e.grad[0] = -s * c / arg;
        e.hess[0] = s * c * c / (arg * arg);
        return e;
    }
};

using Atom = std::variant<SquaredNorm, NormCubed, QuadOverLin, Log2InvRatio, NegLog2Affine>;

inline Atom squared_norm(std::initializer_list<int> idx, std::initializer_list<double> offset, double weight = 1.0) {
    SquaredNorm a;
    a.dim = static_cast<int>(idx.size());
    std::copy(idx.begin(), idx.end(), a.idx.begin());
    std::copy(offset.begin(), offset.end(), a.offset.begin());
    a.weight = weight;
    return a;
}

/// Affine part plus a sum of convex atoms.
struct Function {
    LinearExpr linear;
    double constant = 0.0;
    std::vector<Atom> atoms;

    Function& add(int i, double coef) {
        linear.emplace_back(i, coef);
        return *this;
    }
    Function& add(Atom a) {
        atoms.push_back(std::move(a));
        return *this;
    }
    Function& offset(double c) {
        constant += c;
        return *this;
    }

    template <class Vec>
    double value(const Vec& x) const {
        double v = constant;
        for (const auto& [i, c] : linear) {
            v += c * x[i];
        }
        for (const Atom& atom : atoms) {
            v += std::visit(
                [&](const auto& a) {
                    std::array<double, 3> xs{};
                    for (int i = 0; i < a.arity(); ++i) {
                        xs[i] = x[a.var(i)];
                    }
                    return a.eval(xs.data()).value;
                },
                atom);
        }
        return v;
    }
};

enum class Status { Optimal, Infeasible, MaxIter, NumericalTrouble };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "Optimal";
        case Status::Infeasible: return "Infeasible";
        case Status::MaxIter: return "MaxIter";
        case Status::NumericalTrouble: return "NumericalTrouble";
    }
    return "Unknown";
}

struct Options {
    double tol = 1e-9;
    int max_iter = 200;
};

struct Result {
    Status status = Status::NumericalTrouble;
    std::vector<double> x;
    std::map<std::string, std::vector<double>> variables;
    double objective = 0.0;
    double kkt_residual = kInf;
    double primal_residual = kInf;
    int iterations = 0;

    bool optimal() const { return status == Status::Optimal; }
    const std::vector<double>& operator[](const std::string& name) const { return variables.at(name); }
};

class Program {
public:
    /// Adds `count` variables sharing bounds, start value and scale; returns the first index.
    int add_variables(const std::string& name, int count, double lb, double ub, double start, double scale = 1.0) {
        const int first = size();
        for (int k = 0; k < count; ++k) {
            lb_.push_back(lb);
            ub_.push_back(ub);
            start_.push_back(start);
            scale_.push_back(scale);
        }
        blocks_.push_back({name, first, count});
        return first;
    }
    int add_variable(const std::string& name, double lb, double ub, double start, double scale = 1.0) {
        return add_variables(name, 1, lb, ub, start, scale);
    }

    int size() const { return static_cast<int>(lb_.size()); }
    int inequality_count() const { return static_cast<int>(ineq_.size()); }
    int equality_count() const { return static_cast<int>(eq_rhs_.size()); }

    void set_bounds(int i, double lb, double ub) {
        lb_[i] = lb;
        ub_[i] = ub;
    }
    void set_start(int i, double x0) { start_[i] = x0; }
    void fix(int i, double value) {
        lb_[i] = ub_[i] = start_[i] = value;
    }

    Function& objective() { return objective_; }
    const Function& objective() const { return objective_; }

    /// g(x) <= 0.
    void add_inequality(Function g) { ineq_.push_back(std::move(g)); }

    void add_equality(LinearExpr row, double rhs) {
        eq_rows_.push_back(std::move(row));
        eq_rhs_.push_back(rhs);
    }

    /// row . x <= rhs, through a nonnegative slack variable.
    int add_linear_le(LinearExpr row, double rhs, double slack_scale = 1.0) {
        const int s = add_variable("__slack", 0.0, kInf, slack_scale, slack_scale);
        row.emplace_back(s, 1.0);
        add_equality(std::move(row), rhs);
        return s;
    }

    const std::vector<double>& lower() const { return lb_; }
    const std::vector<double>& upper() const { return ub_; }
    const std::vector<double>& start() const { return start_; }
    const std::vector<double>& scale() const { return scale_; }
    const std::vector<Function>& inequalities() const { return ineq_; }
    const std::vector<LinearExpr>& equality_rows() const { return eq_rows_; }
    const std::vector<double>& equality_rhs() const { return eq_rhs_; }

    struct Block {
        std::string name;
        int first;
        int count;
    };
    const std::vector<Block>& blocks() const { return blocks_; }

private:
    std::vector<double> lb_, ub_, start_, scale_;
    std::vector<Block> blocks_;
    Function objective_;
    std::vector<Function> ineq_;
    std::vector<LinearExpr> eq_rows_;
    std::vector<double> eq_rhs_;
};

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// A function compiled against the solver's scaled variables: the union of
// its variables, the affine part in local positions and each atom's local slots.
struct CompiledFunction {
    std::vector<int> vars;
    std::vector<std::pair<int, double>> linear;
    double constant = 0.0;
    std::vector<Atom> atoms;
    std::vector<std::array<int, 3>> slots;
    double row_scale = 1.0;
};

inline int arity_of(const Atom& a) {
    return std::visit([](const auto& x) { return x.arity(); }, a);
}
inline int var_of(const Atom& a, int i) {
    return std::visit([i](const auto& x) { return x.var(i); }, a);
}

inline CompiledFunction compile(const Function& f) {
    CompiledFunction c;
    auto slot = [&](int gi) {
        auto it = std::find(c.vars.begin(), c.vars.end(), gi);
        if (it != c.vars.end()) {
            return static_cast<int>(it - c.vars.begin());
        }
        c.vars.push_back(gi);
        return static_cast<int>(c.vars.size()) - 1;
    };
    for (const auto& [i, coef] : f.linear) {
        c.linear.emplace_back(slot(i), coef);
    }
    for (const Atom& a : f.atoms) {
        std::array<int, 3> s{};
        for (int i = 0; i < arity_of(a); ++i) {
            s[i] = slot(var_of(a, i));
        }
        c.slots.push_back(s);
        c.atoms.push_back(a);
    }
    c.constant = f.constant;
    return c;
}

// Evaluates a compiled function at scaled point xs (real point = scale .* xs).
// Gradient and Hessian are with respect to the scaled variables in local slots.
struct FunctionEval {
    double value = 0.0;
    std::vector<double> grad;
    std::vector<double> hess;  // row-major, vars.size()^2
};

inline bool eval_function(const CompiledFunction& f, const Vec& xs, const std::vector<double>& scale, bool want_hess,
                          FunctionEval& out) {
    const std::size_t m = f.vars.size();
    out.value = f.constant;
    out.grad.assign(m, 0.0);
    if (want_hess) {
        out.hess.assign(m * m, 0.0);
    }
    for (const auto& [s, coef] : f.linear) {
        const int gi = f.vars[s];
        out.value += coef * scale[gi] * xs[gi];
        out.grad[s] += coef * scale[gi];
    }
    for (std::size_t k = 0; k < f.atoms.size(); ++k) {
        const auto& slots = f.slots[k];
        const bool ok = std::visit(
            [&](const auto& a) {
                std::array<double, 3> loc{};
                const int ar = a.arity();
                for (int i = 0; i < ar; ++i) {
                    loc[i] = scale[a.var(i)] * xs[a.var(i)];
                }
                const LocalEval e = a.eval(loc.data());
                if (!std::isfinite(e.value)) {
                    return false;
                }
                out.value += e.value;
                for (int i = 0; i < ar; ++i) {
                    const double si = scale[a.var(i)];
                    out.grad[slots[i]] += e.grad[i] * si;
                    if (want_hess) {
                        for (int j = 0; j < ar; ++j) {
                            out.hess[slots[i] * m + slots[j]] += e.hess[i * 3 + j] * si * scale[a.var(j)];
                        }
                    }
                }
                return true;
            },
            f.atoms[k]);
        if (!ok) {
            return false;
        }
    }
    out.value *= f.row_scale;
    for (double& g : out.grad) {
        g *= f.row_scale;
    }
    if (want_hess) {
        for (double& h : out.hess) {
            h *= f.row_scale;
        }
    }
    return true;
}

class InteriorPoint {
public:
    InteriorPoint(const Program& prog, const Options& opt) : prog_(prog), opt_(opt) {
        n_ = prog.size();
        scale_ = prog.scale();
        for (double& s : scale_) {
            if (!(s > 0.0)) {
                s = 1.0;
            }
        }
        lb_.resize(n_);
        ub_.resize(n_);
        fixed_.assign(n_, false);
        for (int i = 0; i < n_; ++i) {
            lb_[i] = prog.lower()[i] / scale_[i];
            ub_[i] = prog.upper()[i] / scale_[i];
            fixed_[i] = prog.lower()[i] == prog.upper()[i];
        }
        // Objective split per atom so its Hessian keeps the atoms' sparsity.
        objective_lin_.assign(n_, 0.0);
        for (const auto& [i, c] : prog.objective().linear) {
            objective_lin_[i] += c * scale_[i];
        }
        for (const Atom& a : prog.objective().atoms) {
            Function single;
            single.add(a);
            objective_atoms_.push_back(compile(single));
        }
        for (const Function& g : prog.inequalities()) {
            ineq_.push_back(compile(g));
        }
        m_ = static_cast<int>(ineq_.size());

        // Equalities in scaled variables, each row normalized by its largest entry.
        p_ = prog.equality_count();
        std::vector<Eigen::Triplet<double>> trips;
        b_.resize(p_);
        for (int r = 0; r < p_; ++r) {
            double mx = 0.0;
            for (const auto& [i, c] : prog.equality_rows()[r]) {
                mx = std::max(mx, std::abs(c * scale_[i]));
            }
            const double rs = mx > 0.0 ? 1.0 / mx : 1.0;
            for (const auto& [i, c] : prog.equality_rows()[r]) {
                trips.emplace_back(r, i, c * scale_[i] * rs);
            }
            b_[r] = prog.equality_rhs()[r] * rs;
        }
        A_.resize(p_, n_);
        A_.setFromTriplets(trips.begin(), trips.end());
        At_ = A_.transpose();
    }

    Result run() {
        Result res;
        initialize();
        bool factor_ready = false;
        Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;
        double reg = 1e-9;
        int iter = 0;
        Status status = Status::MaxIter;
        for (; iter < opt_.max_iter; ++iter) {
            if (!evaluate(x_, true, cur_)) {
                status = Status::NumericalTrouble;
                break;
            }
            residuals(cur_);
            if (kkt_ <= opt_.tol) {
                status = Status::Optimal;
                break;
            }
            if (primal_inf_ > opt_.tol && max_multiplier() > 1e14) {
                status = Status::Infeasible;
                break;
            }

            const double avg = average_complementarity();
            const double xi = min_complementarity() / std::max(avg, 1e-300);
            const double sigma = 0.1 * std::pow(std::min(0.05 * (1.0 - xi) / std::max(xi, 1e-12), 2.0), 3.0);
            mu_ = std::max(sigma * avg, opt_.tol * 0.05);

            // Newton system in (dx, dnu).
            SpMat kkt = assemble(reg);
            Vec rhs = newton_rhs();
            if (!factor_ready) {
                ldlt.analyzePattern(kkt);
                factor_ready = true;
            }
            ldlt.factorize(kkt);
            int attempts = 0;
            while (ldlt.info() != Eigen::Success && attempts < 6) {
                reg *= 10.0;
                kkt = assemble(reg);
                ldlt.factorize(kkt);
                ++attempts;
            }
            if (ldlt.info() != Eigen::Success) {
                status = Status::NumericalTrouble;
                break;
            }
            Vec sol = ldlt.solve(rhs);
            // One step of iterative refinement against the regularized system.
            {
                Vec r = rhs - kkt.selfadjointView<Eigen::Lower>() * sol;
                sol += ldlt.solve(r);
            }
            if (!sol.allFinite()) {
                status = Status::NumericalTrouble;
                break;
            }
            if (!take_step(sol)) {
                status = Status::NumericalTrouble;
                break;
            }
        }
        if (status == Status::MaxIter) {
            evaluate(x_, false, cur_);
            residuals(cur_);
            if (kkt_ <= opt_.tol) {
                status = Status::Optimal;
            } else if (primal_inf_ > std::sqrt(opt_.tol)) {
                status = Status::Infeasible;
            }
        }
        // Breakdown far from primal feasibility signals an empty feasible set.
        if (status == Status::NumericalTrouble && primal_inf_ > std::sqrt(opt_.tol)) {
            status = Status::Infeasible;
        }
        res.status = status;
        res.iterations = iter;
        res.kkt_residual = kkt_;
        res.primal_residual = primal_inf_;
        res.x.resize(n_);
        for (int i = 0; i < n_; ++i) {
            res.x[i] = fixed_[i] ? prog_.lower()[i] : x_[i] * scale_[i];
        }
        res.objective = prog_.objective().value(res.x);
        for (const auto& blk : prog_.blocks()) {
            auto& dst = res.variables[blk.name];
            dst.insert(dst.end(), res.x.begin() + blk.first, res.x.begin() + blk.first + blk.count);
        }
        return res;
    }

private:
    struct State {
        double f = 0.0;
        Vec grad_f;
        std::vector<FunctionEval> obj_atoms;
        std::vector<FunctionEval> g;
        Vec gval;
    };

    bool has_lb(int i) const { return !fixed_[i] && std::isfinite(lb_[i]); }
    bool has_ub(int i) const { return !fixed_[i] && std::isfinite(ub_[i]); }

    void initialize() {
        x_.resize(n_);
        const auto& st = prog_.start();
        for (int i = 0; i < n_; ++i) {
            double xi = st[i] / scale_[i];
            if (fixed_[i]) {
                x_[i] = lb_[i];
                continue;
            }
            const double range = ub_[i] - lb_[i];
            if (std::isfinite(lb_[i])) {
                double push = 1e-2 * std::max(1.0, std::abs(lb_[i]));
                if (std::isfinite(range)) {
                    push = std::min(push, 1e-2 * range);
                }
                xi = std::max(xi, lb_[i] + push);
            }
            if (std::isfinite(ub_[i])) {
                double push = 1e-2 * std::max(1.0, std::abs(ub_[i]));
                if (std::isfinite(range)) {
                    push = std::min(push, 1e-2 * range);
                }
                xi = std::min(xi, ub_[i] - push);
            }
            x_[i] = xi;
        }

        // Gradient-based scaling of the objective and the inequality rows.
        State s0;
        if (!evaluate(x_, false, s0)) {
            // Fall back to unit scaling; the line search keeps iterates in the domain.
            obj_scale_ = 1.0;
        } else {
            const double gmax = s0.grad_f.lpNorm<Eigen::Infinity>();
            obj_scale_ = gmax > 100.0 ? 100.0 / gmax : 1.0;
            for (int j = 0; j < m_; ++j) {
                double gm = 0.0;
                for (double v : s0.g[j].grad) {
                    gm = std::max(gm, std::abs(v));
                }
                ineq_[j].row_scale = gm > 100.0 ? 100.0 / gm : 1.0;
            }
        }
        evaluate(x_, false, cur_);

        w_.resize(m_);
        y_.resize(m_);
        for (int j = 0; j < m_; ++j) {
            const double gv = std::isfinite(cur_.gval[j]) ? cur_.gval[j] : 0.0;
            w_[j] = std::max(-gv, 1e-2 * std::max(1.0, std::abs(gv)));
            y_[j] = 1.0;
        }
        nu_ = Vec::Zero(p_);
        zl_ = Vec::Zero(n_);
        zu_ = Vec::Zero(n_);
        for (int i = 0; i < n_; ++i) {
            if (has_lb(i)) {
                zl_[i] = 1.0;
            }
            if (has_ub(i)) {
                zu_[i] = 1.0;
            }
        }
    }

    bool evaluate(const Vec& x, bool want_hess, State& s) const {
        s.grad_f = Eigen::Map<const Vec>(objective_lin_.data(), n_) * obj_scale_;
        s.f = prog_.objective().constant;
        for (int i = 0; i < n_; ++i) {
            s.f += objective_lin_[i] * x[i];
        }
        s.f *= obj_scale_;
        s.obj_atoms.resize(objective_atoms_.size());
        for (std::size_t k = 0; k < objective_atoms_.size(); ++k) {
            if (!eval_function(objective_atoms_[k], x, scale_, want_hess, s.obj_atoms[k])) {
                return false;
            }
            const auto& fe = s.obj_atoms[k];
            s.f += obj_scale_ * fe.value;
            const auto& vars = objective_atoms_[k].vars;
            for (std::size_t a = 0; a < vars.size(); ++a) {
                s.grad_f[vars[a]] += obj_scale_ * fe.grad[a];
            }
        }
        s.g.resize(m_);
        s.gval.resize(m_);
        for (int j = 0; j < m_; ++j) {
            if (!eval_function(ineq_[j], x, scale_, want_hess, s.g[j])) {
                return false;
            }
            s.gval[j] = s.g[j].value;
        }
        return std::isfinite(s.f);
    }

    // KKT residuals at (x_, w_, y_, nu_, zl_, zu_) given the evaluated state.
    void residuals(const State& s) {
        rd_ = s.grad_f;
        if (p_ > 0) {
            rd_ += At_ * nu_;
        }
        for (int j = 0; j < m_; ++j) {
            const auto& vars = ineq_[j].vars;
            for (std::size_t a = 0; a < vars.size(); ++a) {
                rd_[vars[a]] += y_[j] * s.g[j].grad[a];
            }
        }
        rd_ -= zl_;
        rd_ += zu_;
        for (int i = 0; i < n_; ++i) {
            if (fixed_[i]) {
                rd_[i] = 0.0;
            }
        }
        re_ = p_ > 0 ? Vec(A_ * x_ - b_) : Vec();
        ri_.resize(m_);
        for (int j = 0; j < m_; ++j) {
            ri_[j] = s.gval[j] + w_[j];
        }
        primal_inf_ = 0.0;
        if (p_ > 0) {
            primal_inf_ = re_.lpNorm<Eigen::Infinity>();
        }
        if (m_ > 0) {
            primal_inf_ = std::max(primal_inf_, ri_.lpNorm<Eigen::Infinity>());
        }
        double msum = 0.0;
        int mcount = 0;
        for (int j = 0; j < m_; ++j) {
            msum += y_[j];
            ++mcount;
        }
        for (int i = 0; i < n_; ++i) {
            if (has_lb(i)) {
                msum += zl_[i];
                ++mcount;
            }
            if (has_ub(i)) {
                msum += zu_[i];
                ++mcount;
            }
        }
        for (int r = 0; r < p_; ++r) {
            msum += std::abs(nu_[r]);
            ++mcount;
        }
        const double sd = std::max(1.0, (mcount > 0 ? msum / mcount : 0.0) / 100.0);
        dual_inf_ = rd_.lpNorm<Eigen::Infinity>() / sd;
        comp_inf_ = max_complementarity() / sd;
        kkt_ = std::max({primal_inf_, dual_inf_, comp_inf_});
    }

    double max_complementarity() const {
        double c = 0.0;
        for (int j = 0; j < m_; ++j) {
            c = std::max(c, w_[j] * y_[j]);
        }
        for (int i = 0; i < n_; ++i) {
            if (has_lb(i)) {
                c = std::max(c, (x_[i] - lb_[i]) * zl_[i]);
            }
            if (has_ub(i)) {
                c = std::max(c, (ub_[i] - x_[i]) * zu_[i]);
            }
        }
        return c;
    }
    double min_complementarity() const {
        double c = kInf;
        for (int j = 0; j < m_; ++j) {
            c = std::min(c, w_[j] * y_[j]);
        }
        for (int i = 0; i < n_; ++i) {
            if (has_lb(i)) {
                c = std::min(c, (x_[i] - lb_[i]) * zl_[i]);
            }
            if (has_ub(i)) {
                c = std::min(c, (ub_[i] - x_[i]) * zu_[i]);
            }
        }
        return std::isfinite(c) ? c : 0.0;
    }
    double average_complementarity() const {
        double c = 0.0;
        int cnt = 0;
        for (int j = 0; j < m_; ++j) {
            c += w_[j] * y_[j];
            ++cnt;
        }
        for (int i = 0; i < n_; ++i) {
            if (has_lb(i)) {
                c += (x_[i] - lb_[i]) * zl_[i];
                ++cnt;
            }
            if (has_ub(i)) {
                c += (ub_[i] - x_[i]) * zu_[i];
                ++cnt;
            }
        }
        return cnt > 0 ? c / cnt : 0.0;
    }
    double max_multiplier() const {
        double m = 0.0;
        if (m_ > 0) {
            m = y_.lpNorm<Eigen::Infinity>();
        }
        if (p_ > 0) {
            m = std::max(m, nu_.lpNorm<Eigen::Infinity>());
        }
        return std::max({m, zl_.lpNorm<Eigen::Infinity>(), zu_.lpNorm<Eigen::Infinity>()});
    }

    SpMat assemble(double reg) const {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(4 * n_ + 2 * A_.nonZeros() + 16 * m_ + 16 * objective_atoms_.size()));
        auto push = [&](int r, int c, double v) {
            if (fixed_[r] || fixed_[c]) {
                return;
            }
            if (r >= c) {
                t.emplace_back(r, c, v);
            }
        };
        for (std::size_t k = 0; k < objective_atoms_.size(); ++k) {
            const auto& vars = objective_atoms_[k].vars;
            const auto& h = cur_.obj_atoms[k].hess;
            const std::size_t m = vars.size();
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = 0; b < m; ++b) {
                    push(vars[a], vars[b], obj_scale_ * h[a * m + b]);
                }
            }
        }
        for (int j = 0; j < m_; ++j) {
            const auto& vars = ineq_[j].vars;
            const auto& ge = cur_.g[j];
            const std::size_t m = vars.size();
            const double d = y_[j] / w_[j];
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = 0; b < m; ++b) {
                    push(vars[a], vars[b], y_[j] * ge.hess[a * m + b] + d * ge.grad[a] * ge.grad[b]);
                }
            }
        }
        for (int i = 0; i < n_; ++i) {
            if (fixed_[i]) {
                t.emplace_back(i, i, 1.0);
                continue;
            }
            double diag = reg;
            if (has_lb(i)) {
                diag += zl_[i] / (x_[i] - lb_[i]);
            }
            if (has_ub(i)) {
                diag += zu_[i] / (ub_[i] - x_[i]);
            }
            t.emplace_back(i, i, diag);
        }
        for (int c = 0; c < A_.outerSize(); ++c) {
            if (fixed_[c]) {
                continue;
            }
            for (SpMat::InnerIterator it(A_, c); it; ++it) {
                t.emplace_back(n_ + static_cast<int>(it.row()), c, it.value());
            }
        }
        for (int r = 0; r < p_; ++r) {
            t.emplace_back(n_ + r, n_ + r, -reg);
        }
        SpMat K(n_ + p_, n_ + p_);
        K.setFromTriplets(t.begin(), t.end());
        return K;
    }

    Vec newton_rhs() const {
        Vec rhs = Vec::Zero(n_ + p_);
        Vec rx = -rd_;
        for (int j = 0; j < m_; ++j) {
            const double coef = (mu_ - w_[j] * y_[j] + y_[j] * ri_[j]) / w_[j];
            const auto& vars = ineq_[j].vars;
            for (std::size_t a = 0; a < vars.size(); ++a) {
                rx[vars[a]] -= cur_.g[j].grad[a] * coef;
            }
        }
        for (int i = 0; i < n_; ++i) {
            if (fixed_[i]) {
                rx[i] = 0.0;
                continue;
            }
            if (has_lb(i)) {
                rx[i] += mu_ / (x_[i] - lb_[i]) - zl_[i];
            }
            if (has_ub(i)) {
                rx[i] -= mu_ / (ub_[i] - x_[i]) - zu_[i];
            }
        }
        rhs.head(n_) = rx;
        if (p_ > 0) {
            rhs.tail(p_) = -re_;
        }
        return rhs;
    }

    // Merit: squared norm of the perturbed KKT residuals at the target mu.
    double merit(const State& s, const Vec& x, const Vec& w, const Vec& y, const Vec& nu, const Vec& zl,
                 const Vec& zu) const {
        Vec rd = s.grad_f;
        if (p_ > 0) {
            rd += At_ * nu;
        }
        for (int j = 0; j < m_; ++j) {
            const auto& vars = ineq_[j].vars;
            for (std::size_t a = 0; a < vars.size(); ++a) {
                rd[vars[a]] += y[j] * s.g[j].grad[a];
            }
        }
        rd -= zl;
        rd += zu;
        double v = 0.0;
        for (int i = 0; i < n_; ++i) {
            if (!fixed_[i]) {
                v += rd[i] * rd[i];
            }
            if (has_lb(i)) {
                const double c = (x[i] - lb_[i]) * zl[i] - mu_;
                v += c * c;
            }
            if (has_ub(i)) {
                const double c = (ub_[i] - x[i]) * zu[i] - mu_;
                v += c * c;
            }
        }
        if (p_ > 0) {
            v += (A_ * x - b_).squaredNorm();
        }
        for (int j = 0; j < m_; ++j) {
            const double r = s.gval[j] + w[j];
            const double c = w[j] * y[j] - mu_;
            v += r * r + c * c;
        }
        return v;
    }

    bool take_step(const Vec& sol) {
        const Vec dx = sol.head(n_);
        const Vec dnu = p_ > 0 ? Vec(sol.tail(p_)) : Vec();

        Vec dw(m_), dy(m_);
        for (int j = 0; j < m_; ++j) {
            double jdx = 0.0;
            const auto& vars = ineq_[j].vars;
            for (std::size_t a = 0; a < vars.size(); ++a) {
                jdx += cur_.g[j].grad[a] * dx[vars[a]];
            }
            dw[j] = -ri_[j] - jdx;
            dy[j] = (mu_ - w_[j] * y_[j] + y_[j] * ri_[j]) / w_[j] + y_[j] / w_[j] * jdx;
        }
        Vec dzl = Vec::Zero(n_), dzu = Vec::Zero(n_);
        for (int i = 0; i < n_; ++i) {
            if (has_lb(i)) {
                const double sl = x_[i] - lb_[i];
                dzl[i] = (mu_ - sl * zl_[i] - zl_[i] * dx[i]) / sl;
            }
            if (has_ub(i)) {
                const double su = ub_[i] - x_[i];
                dzu[i] = (mu_ - su * zu_[i] + zu_[i] * dx[i]) / su;
            }
        }

        const double tau = std::max(0.99, 1.0 - mu_);
        double ap = 1.0;
        double ad = 1.0;
        auto limit = [tau](double& alpha, double val, double d) {
            if (d < 0.0) {
                alpha = std::min(alpha, -tau * val / d);
            }
        };
        for (int j = 0; j < m_; ++j) {
            limit(ap, w_[j], dw[j]);
            limit(ad, y_[j], dy[j]);
        }
        for (int i = 0; i < n_; ++i) {
            if (has_lb(i)) {
                limit(ap, x_[i] - lb_[i], dx[i]);
                limit(ad, zl_[i], dzl[i]);
            }
            if (has_ub(i)) {
                limit(ap, ub_[i] - x_[i], -dx[i]);
                limit(ad, zu_[i], dzu[i]);
            }
        }

        // A common step length keeps the Newton direction a descent direction of the merit.
        ap = ad = std::min(ap, ad);
        const double m0 = merit(cur_, x_, w_, y_, nu_, zl_, zu_);
        State trial;
        double scale = 1.0;
        for (int bt = 0; bt < 40; ++bt) {
            const double a_p = ap * scale;
            const double a_d = ad * scale;
            Vec x = x_ + a_p * dx;
            if (evaluate(x, false, trial)) {
                Vec w = w_ + a_p * dw;
                Vec y = y_ + a_d * dy;
                Vec nu = p_ > 0 ? Vec(nu_ + a_p * dnu) : nu_;
                Vec zl = zl_ + a_d * dzl;
                Vec zu = zu_ + a_d * dzu;
                const double m1 = merit(trial, x, w, y, nu, zl, zu);
                if (std::isfinite(m1) && (m1 <= (1.0 - 1e-4 * std::min(a_p, a_d)) * m0 || bt == 39)) {
                    x_ = std::move(x);
                    w_ = std::move(w);
                    y_ = std::move(y);
                    nu_ = std::move(nu);
                    zl_ = std::move(zl);
                    zu_ = std::move(zu);
                    return true;
                }
            }
            scale *= 0.5;
        }
        return false;
    }

    const Program& prog_;
    Options opt_;
    int n_ = 0;
    int m_ = 0;
    int p_ = 0;
    std::vector<double> scale_;
    Vec lb_, ub_;
    std::vector<bool> fixed_;
    std::vector<double> objective_lin_;
    std::vector<CompiledFunction> objective_atoms_;
    std::vector<CompiledFunction> ineq_;
    SpMat A_, At_;
    Vec b_;
    double obj_scale_ = 1.0;

    Vec x_, w_, y_, nu_, zl_, zu_;
    State cur_;
    Vec rd_, re_, ri_;
    double mu_ = 0.1;
    double primal_inf_ = kInf;
    double dual_inf_ = kInf;
    double comp_inf_ = kInf;
    double kkt_ = kInf;
};

}  // namespace detail

/// Solves a convex program. Deterministic for identical inputs.
inline Result solve(const Program& program, const Options& options = {}) {
    detail::InteriorPoint ipm(program, options);
    return ipm.run();
}

}  // namespace seeopt::convex
