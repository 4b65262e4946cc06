#pragma once

#include <Eigen/Dense>

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lagvar/expr.hpp"

namespace lagvar {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Parity { Odd, Even };

std::string_view to_string(Parity p);
Parity parse_parity(std::string_view s);

struct Constraint {
    Expr f;
    Parity parity = Parity::Odd;
};

/// Growth constants of the standing assumptions:
///   |a_i| <= C + M|z|,   (1/2) g_ij xi^i xi^j >= K |xi|^2,
///   V <= A|z|^2 - P/|z - s|^2 + C1   for every singular point s.
struct GrowthConstants {
    double C = 0.0;
    double M = 0.0;
    double A = 0.0;
    double K = 0.5;
    double P = 0.0;
    double C1 = 0.0;

    /// Throws ModelError unless all values are finite and nonnegative with K > 0.
    void validate() const;
};

/// Point set removed from configuration space. Stores the base points closed under
/// negation, with angle coordinates reduced to [-pi, pi). Lattice images
/// (x, phi + 2 pi p) are produced on demand.
class SingularSet {
public:
    SingularSet() = default;
    SingularSet(const std::vector<Eigen::VectorXd>& base, int m, int n);

    bool empty() const { return points_.empty(); }
    int m() const { return m_; }
    int n() const { return n_; }
    const std::vector<Eigen::VectorXd>& points() const { return points_; }

    /// All lattice images with |p_j| <= max_shift for every angle coordinate.
    std::vector<Eigen::VectorXd> enumerate(int max_shift) const;

private:
    int m_ = 0;
    int n_ = 0;
    std::vector<Eigen::VectorXd> points_;
};

struct NearestSingular {
    double distance = std::numeric_limits<double>::infinity();
    std::optional<Eigen::VectorXd> witness;
};

/// Distance from `point` to the full singular set, including negations and
/// 2 pi translates in every angle coordinate.
NearestSingular nearest_singular(const SingularSet& s, const Eigen::Ref<const Eigen::VectorXd>& point);

/// Reduces an angle to [-pi, pi).
double reduce_angle(double phi);

struct ModelSpec {
    std::string name;
    int m = 0;  // linear coordinates x
    int n = 0;  // angle coordinates phi
    double omega = 1.0;
    std::vector<int> nu;                   // length n
    std::vector<std::vector<Expr>> metric;  // (m+n) x (m+n)
    std::vector<Expr> gyro;                 // m+n
    Expr potential;
    std::vector<Constraint> constraints;
    GrowthConstants constants;
    std::vector<Eigen::VectorXd> sigma_base;

    int dim() const { return m + n; }
    SingularSet singular_set() const { return SingularSet(sigma_base, m, n); }
    /// True when no expression references t.
    bool is_autonomous() const;
};

/// Validates and normalizes a model in place: symmetrizes the metric, closes
/// sigma under negation (dropping duplicates) and checks every invariant.
/// Throws ModelError.
void normalize(ModelSpec& model);

using ParamMap = std::map<std::string, double>;

/// Built-in models: two_centers, surface_slide, tube_ball, cylinder, forced_oscillator.
ModelSpec builtin(std::string_view name, const ParamMap& params = {});

std::vector<std::string> builtin_names();

}  // namespace lagvar
