#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagvar/lagrangian.hpp"
#include "lagvar/trajectory.hpp"

namespace lagvar {

class VerifyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Sampler {
    int count = 2000;
    double box = 10.0;          // |z_d| <= box, t in [-omega, omega]
    std::uint64_t seed = 0;
    double guard = 1e-3;        // minimum distance of samples to sigma
    double near_fraction = 0.2; // share of samples placed close to sigma
};

struct Witness {
    double t = 0.0;
    Eigen::VectorXd z;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string detail;
};

struct Check {
    bool ok = true;
    bool skipped = false;
    std::optional<Witness> witness;
};

/// One violated hypothesis: `condition` is "condition 1" (evenness),
/// "condition 2" (coercivity margin), "growth bounds", "rank" or
/// "constraint parity"; `hypothesis` names the failing flag.
struct Violation {
    std::string condition;
    std::string hypothesis;
};

struct HypothesisReport {
    std::vector<std::pair<std::string, Check>> parity;             // per function: g[i][j], a[i], V
    std::vector<std::pair<std::string, Check>> constraint_parity;  // per constraint f[j]
    bool parity_ok = true;
    Check bound_a, bound_g, bound_V, rank;
    double min_singular_ratio = std::numeric_limits<double>::infinity();  // on F, relative to the largest sampled value
    int feasible_points = 0;
    double margin = 0.0;
    int samples = 0;
    std::vector<Violation> violated;
    std::vector<std::string> warnings;
    bool overall = false;

    bool violates(const std::string& condition) const;
};

HypothesisReport check_hypotheses(const ModelSpec& model, const Sampler& sampler);

struct ResidualReport {
    int nodes = 0;
    double el_sup = 0.0;
    double el_l2 = 0.0;
    Eigen::VectorXd times;
    Eigen::MatrixXd multipliers;  // nodes x l; empty without constraints
    double constraint_sup = 0.0;
    double constraint_rate_sup = 0.0;  // sup |df/dt + J zd|
    int pseudo_inverse_nodes = 0;      // nodes where the Gram matrix was near-singular
    bool rank_deficient = false;       // J lost rank at some node
    std::optional<double> energy_drift;
    double min_distance = std::numeric_limits<double>::infinity();
    double clearance_integral = 0.0;
    double holder_half = 0.0;          // sup |z(t)-z(s)| / |t-s|^(1/2) over node pairs
};

/// Least-squares alpha with J^T alpha ~ R, through the Gram matrix J J^T and a
/// pseudo-inverse when it is near-singular (`used_fallback` reports which).
Eigen::VectorXd recover_multipliers(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual,
                                    bool* used_fallback = nullptr);

ResidualReport el_residual(const ModelSpec& model, const FourierTrajectory& traj, int nodes);

/// sup_i |h(t_i) - h(t_0)| for the Jacobi integral. Throws VerifyError for
/// time-dependent models.
double energy_drift(const ModelSpec& model, const FourierTrajectory& traj, int nodes);

enum class HomotopyVerdict { Homotopic, Inconclusive };

std::string to_string(HomotopyVerdict v);

/// One-sided test: Homotopic when sup |z1 - z2| < delta/2 and the windings agree.
/// Throws VerifyError when either trajectory comes closer than delta to sigma.
HomotopyVerdict homotopy_equiv_sufficient(const FourierTrajectory& t1, const FourierTrajectory& t2,
                                          const SingularSet& s, double delta);

}  // namespace lagvar
