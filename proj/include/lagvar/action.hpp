#pragma once

#include <Eigen/Dense>

#include <stdexcept>

#include "lagvar/lagrangian.hpp"
#include "lagvar/trajectory.hpp"

namespace lagvar {

/// A quadrature node landed on (or within rounding of) a singular point.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ActionReport {
    double S = 0.0;
    double grad_norm = 0.0;
    double h1 = 0.0;
    double min_distance = std::numeric_limits<double>::infinity();
    double margin = 0.0;
    double lower_bound_at_h1 = 0.0;
};

/// Discrete action on M uniform nodes (rectangle rule, which is the trapezoid
/// rule for periodic integrands), with optional quadratic constraint penalty
///
///   S_mu = S + mu/2 * (omega/M) * sum_{i,j} f_j(t_i, z_i)^2.
///
/// The gradient is the exact derivative of this discrete objective with respect
/// to the sine coefficients.
class ActionEvaluator {
public:
    struct Result {
        double action = 0.0;          // S
        double constraint_sq = 0.0;   // (omega/M) sum f^2
        double objective = 0.0;       // S_mu
        Eigen::MatrixXd gradient;     // N x dim, of S_mu; empty unless requested
        double min_node_distance = std::numeric_limits<double>::infinity();
    };

    ActionEvaluator(const Lagrangian& lagrangian, double omega, int modes, int nodes);

    const SineBasis& basis() const { return basis_; }

    Result evaluate(const FourierTrajectory& traj, double mu = 0.0, bool with_gradient = true) const;

    static constexpr double kMachineGuard = 1e-10;

private:
    const Lagrangian& lag_;
    SineBasis basis_;
    SingularSet sigma_;
};

double action(const ModelSpec& model, const FourierTrajectory& traj, int nodes);
Eigen::MatrixXd action_gradient(const ModelSpec& model, const FourierTrajectory& traj, int nodes);

/// K - M omega / sqrt(2) - A omega^2 / 2.
double coercivity_margin(const GrowthConstants& k, double omega);

/// margin * h1^2 - C sqrt(omega) h1. The additive C1*omega is left to the caller.
double action_lower_bound(const GrowthConstants& k, double omega, double h1);

/// Larger root of margin r^2 - C sqrt(omega) r - (s_ref + C1 omega) = 0. Every
/// minimizer whose action does not exceed s_ref has norm below it. Throws
/// std::domain_error when the margin is not positive.
double apriori_radius(const GrowthConstants& k, double omega, double s_ref);

ActionReport make_action_report(const ModelSpec& model, const FourierTrajectory& traj, int nodes);

}  // namespace lagvar
