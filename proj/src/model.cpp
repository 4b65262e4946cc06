#include "lagvar/model.hpp"

#include <cmath>
#include <numbers>

namespace lagvar {

std::string_view to_string(Parity p) { return p == Parity::Odd ? "odd" : "even"; }

Parity parse_parity(std::string_view s) {
    if (s == "odd") return Parity::Odd;
    if (s == "even") return Parity::Even;
    throw ModelError("constraint parity must be \"odd\" or \"even\", got \"" + std::string(s) + "\"");
}

void GrowthConstants::validate() const {
    const std::pair<const char*, double> all[] = {{"C", C}, {"M", M}, {"A", A}, {"K", K}, {"P", P}, {"C1", C1}};
    for (const auto& [key, v] : all) {
        if (!std::isfinite(v)) throw ModelError(std::string("growth constant ") + key + " is not finite");
        if (v < 0.0) throw ModelError(std::string("growth constant ") + key + " is negative");
    }
    if (!(K > 0.0)) throw ModelError("growth constant K must be strictly positive");
}

double reduce_angle(double phi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = phi - two_pi * std::floor((phi + std::numbers::pi) / two_pi);
    if (r >= std::numbers::pi) r -= two_pi;
    if (r < -std::numbers::pi) r += two_pi;
    return r;
}

namespace {

bool same_point(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + a.lpNorm<Eigen::Infinity>());
}

Eigen::VectorXd reduce_point(Eigen::VectorXd p, int m) {
    for (int j = m; j < p.size(); ++j) p[j] = reduce_angle(p[j]);
    return p;
}

}  // namespace

SingularSet::SingularSet(const std::vector<Eigen::VectorXd>& base, int m, int n) : m_(m), n_(n) {
    auto add = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r = reduce_point(p, m);
        for (const auto& q : points_)
            if (same_point(q, r)) return;
        points_.push_back(std::move(r));
    };
    for (const auto& p : base) {
        if (p.size() != m + n) throw ModelError("singular point has wrong dimension");
        add(p);
        add(-p);
    }
}

std::vector<Eigen::VectorXd> SingularSet::enumerate(int max_shift) const {
    std::vector<Eigen::VectorXd> out;
    const int side = 2 * max_shift + 1;
    long total = 1;
    for (int j = 0; j < n_; ++j) total *= side;
    for (const auto& p : points_) {
        for (long code = 0; code < total; ++code) {
            Eigen::VectorXd q = p;
            long c = code;
            for (int j = 0; j < n_; ++j) {
                int shift = static_cast<int>(c % side) - max_shift;
                c /= side;
                q[m_ + j] += 2.0 * std::numbers::pi * shift;
            }
            out.push_back(std::move(q));
        }
    }
    return out;
}

NearestSingular nearest_singular(const SingularSet& s, const Eigen::Ref<const Eigen::VectorXd>& point) {
    NearestSingular best;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const int m = s.m();
    for (const auto& p : s.points()) {
        // The squared distance separates over coordinates, so the best lattice
        // shift is chosen independently per angle.
        Eigen::VectorXd image = p;
        for (int j = m; j < p.size(); ++j) image[j] = p[j] + two_pi * std::round((point[j] - p[j]) / two_pi);
        double d = (point - image).norm();
        if (d < best.distance) {
            best.distance = d;
            best.witness = image;
        }
    }
    return best;
}

bool ModelSpec::is_autonomous() const {
    const Var t = Var::time();
    for (const auto& row : metric)
        for (const auto& g : row)
            if (g.depends_on(t)) return false;
    for (const auto& a : gyro)
        if (a.depends_on(t)) return false;
    if (potential.depends_on(t)) return false;
    for (const auto& c : constraints)
        if (c.f.depends_on(t)) return false;
    return true;
}

void normalize(ModelSpec& model) {
    if (model.m < 0 || model.n < 0) throw ModelError("coordinate counts must be nonnegative");
    const int dim = model.dim();
    if (dim < 1) throw ModelError("model needs at least one coordinate");
    if (!(model.omega > 0.0) || !std::isfinite(model.omega)) throw ModelError("omega must be positive and finite");
    if (static_cast<int>(model.nu.size()) != model.n)
        throw ModelError("winding vector nu must have length n = " + std::to_string(model.n));
    if (static_cast<int>(model.metric.size()) != dim) throw ModelError("metric must have m+n rows");
    for (const auto& row : model.metric)
        if (static_cast<int>(row.size()) != dim) throw ModelError("metric must have m+n columns");
    if (model.gyro.empty()) model.gyro.assign(dim, Expr::constant(0.0));
    if (static_cast<int>(model.gyro.size()) != dim) throw ModelError("gyro must have m+n entries");
    if (static_cast<int>(model.constraints.size()) >= dim)
        throw ModelError("number of constraints must be smaller than m+n");
    model.constants.validate();

    auto check_vars = [dim](const Expr& e, const std::string& what) {
        if (e.max_coordinate() > dim) throw ModelError(what + " references a coordinate beyond z" + std::to_string(dim));
    };
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) check_vars(model.metric[i][j], "metric entry");
        check_vars(model.gyro[i], "gyro entry");
    }
    check_vars(model.potential, "potential");
    for (const auto& c : model.constraints) check_vars(c.f, "constraint");

    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            auto& gij = model.metric[i][j];
            auto& gji = model.metric[j][i];
            if (gij.str() != gji.str()) {
                Expr sym = simplify(0.5 * (gij + gji));
                gij = sym;
                gji = sym;
            }
        }
    }

    SingularSet closed(model.sigma_base, model.m, model.n);
    model.sigma_base = closed.points();
}

}  // namespace lagvar
