#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "lagvar/model.hpp"

namespace lagvar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reads named parameters with defaults and rejects anything unrecognized.
class Params {
public:
    Params(std::string_view model, const ParamMap& values) : model_(model), values_(values) {}

    double get(const std::string& key, double fallback) {
        used_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double positive(const std::string& key, double fallback) {
        double v = get(key, fallback);
        if (!(v > 0.0) || !std::isfinite(v))
            throw ModelError(model_ + ": parameter '" + key + "' must be positive, got " + std::to_string(v));
        return v;
    }

    int integer(const std::string& key, int fallback) {
        double v = get(key, fallback);
        if (v != std::trunc(v)) throw ModelError(model_ + ": parameter '" + key + "' must be an integer");
        return static_cast<int>(v);
    }

    void finish() const {
        for (const auto& [key, _] : values_)
            if (!used_.count(key)) throw ModelError(model_ + ": unknown parameter '" + key + "'");
    }

private:
    std::string model_;
    const ParamMap& values_;
    std::set<std::string> used_;
};

Expr squared_distance(const Expr& x, const Expr& y, double cx, double cy) {
    return pow(x - cx, 2.0) + pow(y - cy, 2.0);
}

std::vector<std::vector<Expr>> diagonal_metric(std::vector<Expr> diag) {
    const std::size_t dim = diag.size();
    std::vector<std::vector<Expr>> g(dim, std::vector<Expr>(dim, Expr::constant(0.0)));
    for (std::size_t i = 0; i < dim; ++i) g[i][i] = diag[i];
    return g;
}

// -gamma (|r - r0|^{-n} + |r + r0|^{-n})
Expr two_center_field(double gamma, double n, double r0x, double r0y) {
    const Expr x = Expr::z(1), y = Expr::z(2);
    return -gamma * (pow(squared_distance(x, y, r0x, r0y), -0.5 * n) + pow(squared_distance(x, y, -r0x, -r0y), -0.5 * n));
}

// Strong-force bound: for n >= 2, -c d^{-n} <= -c d^{-2} + (n > 2 ? c : 0).
void strong_force_constants(GrowthConstants& k, double coupling, double n) {
    if (n >= 2.0) {
        k.P = coupling;
        k.C1 = n > 2.0 ? coupling : 0.0;
    }
}

ModelSpec two_centers(Params& p) {
    const double gamma = p.positive("gamma", 1.0);
    const double n = p.positive("n", 2.0);
    const double mass = p.positive("mass", 1.0);
    const double r0x = p.get("r0x", 1.0);
    const double r0y = p.get("r0y", 0.0);
    const double omega = p.positive("omega", kTwoPi);
    if (r0x == 0.0 && r0y == 0.0) throw ModelError("two_centers: r0 must be nonzero");

    ModelSpec model;
    model.name = "two_centers";
    model.m = 2;
    model.n = 0;
    model.omega = omega;
    model.metric = diagonal_metric({Expr::constant(mass), Expr::constant(mass)});
    model.potential = two_center_field(gamma, n, r0x, r0y);
    model.constants = GrowthConstants{.C = 0.0, .M = 0.0, .A = 0.0, .K = 0.5 * mass, .P = 0.0, .C1 = 0.0};
    strong_force_constants(model.constants, gamma, n);
    model.sigma_base = {Eigen::Vector2d(r0x, r0y), Eigen::Vector2d(-r0x, -r0y)};
    return model;
}

ModelSpec surface_slide(Params& p) {
    const double gamma = p.positive("gamma", 1.0);
    const double n = p.positive("n", 2.0);
    const double mass = p.positive("mass", 1.0);
    const double g = p.positive("g", 9.81);
    const double r0x = p.get("r0x", 1.0);
    const double r0y = p.get("r0y", 0.0);
    const double omega = p.positive("omega", kTwoPi);
    if (r0x == 0.0 && r0y == 0.0) throw ModelError("surface_slide: r0 must be nonzero");

    // Height of the surface z = f(r); the kinetic term m/2 (|r'|^2 + (grad f . r')^2)
    // becomes the metric m (delta_ij + d_i f d_j f).
    const Expr f = two_center_field(gamma, n, r0x, r0y);
    const Expr fx = differentiate(f, Var::coord(1));
    const Expr fy = differentiate(f, Var::coord(2));

    ModelSpec model;
    model.name = "surface_slide";
    model.m = 2;
    model.n = 0;
    model.omega = omega;
    model.metric = {{mass * (1.0 + fx * fx), mass * (fx * fy)}, {mass * (fx * fy), mass * (1.0 + fy * fy)}};
    model.potential = (mass * g) * f;
    model.constants = GrowthConstants{.C = 0.0, .M = 0.0, .A = 0.0, .K = 0.5 * mass, .P = 0.0, .C1 = 0.0};
    strong_force_constants(model.constants, mass * g * gamma, n);
    model.sigma_base = {Eigen::Vector2d(r0x, r0y), Eigen::Vector2d(-r0x, -r0y)};
    return model;
}

// Coordinates (x, phi): ball offset along the tube and tube angle.
ModelSpec tube_ball(Params& p) {
    const double mass = p.positive("m", 1.0);
    const double inertia = p.positive("J", 1.0);
    const double g = p.positive("g", 9.81);
    const double omega = p.positive("omega", 1.0);
    const int nu = p.integer("nu", 1);
    // |m g x sin phi| <= m g |x| <= A |z|^2 + (m g)^2 / (4A)
    const double a = p.positive("A", 0.5);

    const Expr x = Expr::z(1), phi = Expr::z(2);
    ModelSpec model;
    model.name = "tube_ball";
    model.m = 1;
    model.n = 1;
    model.omega = omega;
    model.nu = {nu};
    model.metric = diagonal_metric({Expr::constant(mass), mass * pow(x, 2.0) + inertia});
    model.potential = (mass * g) * (x * sin(phi));
    model.constants = GrowthConstants{
        .C = 0.0, .M = 0.0, .A = a, .K = 0.5 * std::min(mass, inertia), .P = 0.0, .C1 = mass * mass * g * g / (4.0 * a)};
    return model;
}

// Coordinates (x, phi) on a vertical cylinder of radius r; x points up.
ModelSpec cylinder(Params& p) {
    const double mass = p.positive("m", 1.0);
    const double r = p.positive("r", 1.0);
    const double g = p.positive("g", 9.81);
    const double omega = p.positive("omega", 1.0);
    const int nu = p.integer("nu", 1);
    const double k = 0.5 * std::min(mass, mass * r * r);
    const double a = p.positive("A", 0.5 * k);

    ModelSpec model;
    model.name = "cylinder";
    model.m = 1;
    model.n = 1;
    model.omega = omega;
    model.nu = {nu};
    model.metric = diagonal_metric({Expr::constant(mass), Expr::constant(mass * r * r)});
    model.potential = (mass * g) * Expr::z(1);
    model.constants = GrowthConstants{.C = 0.0, .M = 0.0, .A = a, .K = k, .P = 0.0, .C1 = mass * mass * g * g / (4.0 * a)};
    return model;
}

// L = x'^2/2 - (x - sin t)^2/2; the forcing fixes the period to 2 pi.
ModelSpec forced_oscillator(Params& p) {
    const double omega = p.get("omega", kTwoPi);
    if (std::abs(omega - kTwoPi) > 1e-12) throw ModelError("forced_oscillator: omega is fixed to 2 pi");

    ModelSpec model;
    model.name = "forced_oscillator";
    model.m = 1;
    model.n = 0;
    model.omega = kTwoPi;
    model.metric = diagonal_metric({Expr::constant(1.0)});
    model.potential = 0.5 * pow(Expr::z(1) - sin(Expr::t()), 2.0);
    model.constants = GrowthConstants{.C = 0.0, .M = 0.0, .A = p.positive("A", 0.5), .K = 0.5, .P = 0.0,
                                      .C1 = p.get("C1", 0.5)};
    return model;
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"two_centers", "surface_slide", "tube_ball", "cylinder", "forced_oscillator"};
}

ModelSpec builtin(std::string_view name, const ParamMap& params) {
    Params p(name, params);
    ModelSpec model;
    if (name == "two_centers")
        model = two_centers(p);
    else if (name == "surface_slide")
        model = surface_slide(p);
    else if (name == "tube_ball")
        model = tube_ball(p);
    else if (name == "cylinder")
        model = cylinder(p);
    else if (name == "forced_oscillator")
        model = forced_oscillator(p);
    else
        throw ModelError("unknown builtin model '" + std::string(name) + "'");
    p.finish();
    normalize(model);
    return model;
}

}  // namespace lagvar
