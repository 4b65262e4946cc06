#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lagvar/model.hpp"

namespace lagvar {

class TrajectoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Odd trajectory with prescribed winding:
///
///   z^d(t) = drift_d t + sum_{k=1..N} b[k][d] sin(2 pi k t / omega),
///
/// with drift_d = 0 for the m linear coordinates and drift_{m+j} = 2 pi nu_j / omega
/// for the angles. Oddness and x(t+omega) = x(t), phi(t+omega) = phi(t) + 2 pi nu hold
/// by construction.
struct FourierTrajectory {
    double omega = 1.0;
    int m = 0;
    std::vector<int> nu;
    Eigen::MatrixXd coeffs;  // N x (m+n); row k-1 holds mode k

    static FourierTrajectory zero(double omega, int m, std::vector<int> nu, int modes);
    static FourierTrajectory zero_for(const ModelSpec& model, int modes);

    int modes() const { return static_cast<int>(coeffs.rows()); }
    int dim() const { return static_cast<int>(coeffs.cols()); }
    int n() const { return static_cast<int>(nu.size()); }

    /// Angular frequency of mode k (1-based).
    double frequency(int k) const;
    Eigen::VectorXd drift() const;

    Eigen::VectorXd position(double t) const;
    Eigen::VectorXd velocity(double t) const;
    Eigen::VectorXd acceleration(double t) const;

    /// The point reflection -z(t); winding vector becomes -nu.
    FourierTrajectory negated() const;
    /// Same trajectory truncated or zero-padded to `modes` modes.
    FourierTrajectory with_modes(int modes) const;

    /// Throws TrajectoryError on inconsistent shape or non-finite data.
    void validate() const;
};

/// Values at uniform nodes t_i = i omega / M, i = 0..M-1. Rows are nodes.
struct SampledPath {
    Eigen::VectorXd t;
    Eigen::MatrixXd z;
    Eigen::MatrixXd zd;
    Eigen::MatrixXd zdd;

    int nodes() const { return static_cast<int>(t.size()); }
};

/// Tabulated sin/cos of every mode at uniform nodes.
class SineBasis {
public:
    SineBasis(double omega, int modes, int nodes);

    double omega() const { return omega_; }
    int modes() const { return modes_; }
    int nodes() const { return nodes_; }
    const Eigen::VectorXd& times() const { return t_; }
    const Eigen::VectorXd& frequencies() const { return kappa_; }
    const Eigen::MatrixXd& sin_table() const { return sin_; }  // nodes x modes
    const Eigen::MatrixXd& cos_table() const { return cos_; }

    /// z and zd only (zdd left empty) unless `with_acceleration`.
    SampledPath sample(const FourierTrajectory& traj, bool with_acceleration = true) const;

private:
    double omega_;
    int modes_;
    int nodes_;
    Eigen::VectorXd t_;
    Eigen::VectorXd kappa_;
    Eigen::MatrixXd sin_;
    Eigen::MatrixXd cos_;
};

/// Exact basis evaluation at M uniform nodes. Requires M >= 2N+1.
SampledPath sample(const FourierTrajectory& traj, int nodes);

/// ||z|| = ||zd||_{L2(0, omega)}, by Parseval.
double h1_seminorm(const FourierTrajectory& traj);

/// Signed turning number of the closed polygon through `points` about `center`
/// (counterclockwise positive). Reports the largest absolute angle increment.
double winding_of_polygon(const std::vector<Eigen::Vector2d>& points, const Eigen::Vector2d& center,
                          double* max_increment = nullptr);

struct HomotopySignature {
    bool windings_defined = false;  // planar case m = 2, n = 0 with nonempty sigma
    std::vector<std::pair<Eigen::Vector2d, int>> windings;
    double min_distance = std::numeric_limits<double>::infinity();
    double clearance_integral = 0.0;  // int_0^omega dt / |z - s|^2 for the nearest s
    std::optional<Eigen::VectorXd> nearest_point;
    int nodes_used = 0;

    /// Winding number about `point`, if that point is tracked.
    std::optional<int> winding_about(const Eigen::Vector2d& point) const;
    bool same_windings(const HomotopySignature& other) const;
};

class WindingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Windings about every planar singular point plus clearance diagnostics.
/// `nodes` = 0 selects 16 N. The node count doubles until every angle increment
/// is below pi/2; throws WindingError past `max_nodes`.
HomotopySignature winding_signature(const FourierTrajectory& traj, const SingularSet& s, int nodes = 0,
                                    int max_nodes = 1 << 20);

/// Smooth odd seed curve that coils `coils` times about r0 during the first half
/// period and the same number of times about -r0 during the second (clockwise
/// about r0), projected onto `modes` sine modes. Throws TrajectoryError when the
/// projection comes within `guard` of sigma or loses the target windings.
FourierTrajectory seed_curve(int coils, const SingularSet& s, double omega, int modes, double guard = -1.0);

/// Analytic seed curve before projection, for z in [0, omega) (extended periodically).
Eigen::Vector2d seed_curve_point(int coils, const Eigen::Vector2d& r0, double omega, double t);

struct OddBoundResult {
    double lhs_l2 = 0.0;  // ||u||^2_{L2(0,a)}
    double lhs_c = 0.0;   // ||u||^2_{C[0,a]}
    double rhs_l2 = 0.0;  // a^2/2 ||u'||^2_{L2(0,a)}
    double rhs_c = 0.0;   // a ||u'||^2_{L2(0,a)}
    bool holds_l2 = false;
    bool holds_c = false;
};

/// Checks ||u||^2_{L2(0,a)} <= a^2/2 ||u'||^2 and ||u||^2_C <= a ||u'||^2 for the
/// component `component` (0-based) of `traj` by dense quadrature.
OddBoundResult odd_bound_check(const FourierTrajectory& traj, int component, double a);

/// Composite 8-point Gauss-Legendre quadrature of f over [a, b].
double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels);

}  // namespace lagvar
