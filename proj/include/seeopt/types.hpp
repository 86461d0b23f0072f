#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace seeopt {

using Vec2 = Eigen::Vector2d;

/// Error classes raised by the library. The CLI maps them onto exit codes.
enum class ErrorCode {
    SpeedUnderflow,
    ZeroEnergy,
    DimensionMismatch,
    InvalidArgument,
    InfeasibleGeometry,
    AccelerationExceeded,
    InfeasibleInitialDesign,
    SubproblemFailure,
    ParseError,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::SpeedUnderflow: return "SpeedUnderflow";
        case ErrorCode::ZeroEnergy: return "ZeroEnergy";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InfeasibleGeometry: return "InfeasibleGeometry";
        case ErrorCode::AccelerationExceeded: return "AccelerationExceeded";
        case ErrorCode::InfeasibleInitialDesign: return "InfeasibleInitialDesign";
        case ErrorCode::SubproblemFailure: return "SubproblemFailure";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Ground node positions, UAV altitude and trajectory endpoints (meters).
struct NodeLayout {
    Vec2 w_S{-750.0, 0.0};
    Vec2 w_D{750.0, 0.0};
    Vec2 w_E{300.0, -300.0};
    double H = 100.0;
    Vec2 q_0{-900.0, -200.0};
    Vec2 q_F{900.0, -200.0};
};

struct ChannelParams {
    double beta_0 = 1e-5;   // linear gain at 1 m
    double sigma2 = 1e-14;  // W
    double K = 1e-3;
    double alpha = 3.0;
    double zeta_SE = 1.0;
    double B = 1e6;  // Hz

    double gamma_0() const { return beta_0 / sigma2; }
};

struct EnergyParams {
    double c1 = 9.26e-4;
    double c2 = 2250.0;
    double g = 9.8;
    double mass = 10.0;  // kg, only enters the kinetic-energy report
};

struct UavLimits {
    double V_max = 40.0;
    double a_max = 5.0;
    double delta_t = 1.0;
    int N = 100;
    double P_s_bar = 0.01;  // W
    double P_r_bar = 0.01;  // W

    double horizon() const { return N * delta_t; }
};

/// Positions and velocities are indexed 0..N, accelerations 0..N-1.
struct Trajectory {
    std::vector<Vec2> q;
    std::vector<Vec2> v;
    std::vector<Vec2> a;

    int slots() const { return static_cast<int>(a.size()); }
};

/// Per-slot reception share. lambda[k] = 1 means slot k+1 receives from S.
struct Schedule {
    std::vector<double> lambda;
    int eta = 1;
};

struct PowerAllocation {
    std::vector<double> p_s;
    std::vector<double> p_r;
};

/// Per-slot spectral rates in bits/s/Hz, already gated by lambda / (1 - lambda).
struct RateProfile {
    std::vector<double> r_SR;
    std::vector<double> r_SE;
    std::vector<double> r_RD;
    std::vector<double> r_RE;

    std::size_t size() const { return r_SR.size(); }
};

struct Design {
    Schedule schedule;
    PowerAllocation power;
    Trajectory trajectory;
};

/// Parameters of the double-circular initializer. speed <= 0 selects it automatically.
struct InitParams {
    double speed = 0.0;
    int laps = 1;
    double speed_fraction = 0.75;  // of V_max, when selected automatically
    double accel_margin = 0.9;     // fraction of a_max usable on the circles
};

struct AlgorithmParams {
    double epsilon = 1e-5;
    double solver_tol = 1e-7;
    double dinkelbach_tol = 1e-6;
    int dinkelbach_max_iter = 30;
    int eta = 100;
    int max_outer = 100;
    int stall_limit = 5;
    double v_floor = 0.1;
};

struct Scenario {
    std::string label = "default";
    unsigned seed = 0;
    NodeLayout layout;
    ChannelParams channel;
    EnergyParams energy;
    UavLimits limits;
    InitParams init;
    AlgorithmParams algo;
};

struct Tolerances {
    double kin_tol = 1e-6;
    double rel_tol = 1e-6;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace seeopt
