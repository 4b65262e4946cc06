#include "lagvar/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lagvar/action.hpp"

namespace lagvar {

namespace {

constexpr double kParityTol = 1e-10;
constexpr double kBoundTol = 1e-10;
constexpr double kRankTol = 1e-8;

struct SamplePoint {
    double t;
    Eigen::VectorXd z;
};

std::vector<SamplePoint> draw_samples(const ModelSpec& model, const Sampler& sp) {
    const int dim = model.dim();
    const SingularSet sigma = model.singular_set();
    std::mt19937_64 rng(sp.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int near = sigma.empty() ? 0 : static_cast<int>(std::lround(sp.near_fraction * sp.count));

    std::vector<SamplePoint> out;
    out.reserve(sp.count);
    int attempts = 0;
    while (static_cast<int>(out.size()) < sp.count && attempts < 100 * sp.count) {
        ++attempts;
        SamplePoint p;
        p.t = model.omega * (2.0 * unit(rng) - 1.0);
        p.z.resize(dim);
        if (static_cast<int>(out.size()) < near) {
            const auto& pts = sigma.points();
            const auto& base = pts[std::min<std::size_t>(pts.size() - 1, static_cast<std::size_t>(unit(rng) * pts.size()))];
            Eigen::VectorXd dir(dim);
            for (int d = 0; d < dim; ++d) dir[d] = normal(rng);
            if (dir.norm() == 0.0) continue;
            const double r = sp.guard * std::pow(1e3, unit(rng)) * (1.0 + 1e-9);
            p.z = base + r * dir.normalized();
        } else {
            for (int d = 0; d < dim; ++d) p.z[d] = sp.box * (2.0 * unit(rng) - 1.0);
        }
        if (!sigma.empty() && nearest_singular(sigma, p.z).distance < sp.guard) continue;
        out.push_back(std::move(p));
    }
    return out;
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Tests f(-t,-z) == sign * f(t,z) over the samples; records the first witness.
Check parity_check(const Expr& f, double sign, const std::vector<SamplePoint>& samples) {
    Check c;
    int evaluated = 0;
    for (const auto& p : samples) {
        double here, there;
        const Eigen::VectorXd mz = -p.z;
        try {
            here = eval(f, p.t, {p.z.data(), static_cast<std::size_t>(p.z.size())});
            there = eval(f, -p.t, {mz.data(), static_cast<std::size_t>(mz.size())});
        } catch (const DomainError&) {
            continue;
        }
        ++evaluated;
        if (!close_rel(there, sign * here, kParityTol)) {
            c.ok = false;
            c.witness = Witness{p.t, p.z, there, sign * here, "value at (-t,-z) vs expected"};
            return c;
        }
    }
    if (evaluated == 0) c.skipped = true;
    return c;
}

// Gauss-Newton projection onto {f = 0}.
std::optional<Eigen::VectorXd> project_to_constraints(const Lagrangian& lag, double t, Eigen::VectorXd z) {
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd f;
        Eigen::MatrixXd j;
        try {
            f = lag.constraint_values(t, z);
            j = lag.constraint_jacobian(t, z);
        } catch (const DomainError&) {
            return std::nullopt;
        }
        if (!f.allFinite() || !j.allFinite()) return std::nullopt;
        if (f.norm() <= 1e-12 * std::max(1.0, z.norm())) return z;
        const Eigen::VectorXd step = j.completeOrthogonalDecomposition().solve(f);
        if (!step.allFinite()) return std::nullopt;
        z -= step;
    }
    return std::nullopt;
}

}  // namespace

bool HypothesisReport::violates(const std::string& condition) const {
    return std::any_of(violated.begin(), violated.end(), [&](const Violation& v) { return v.condition == condition; });
}

HypothesisReport check_hypotheses(const ModelSpec& model, const Sampler& sampler) {
    if (sampler.count < 1) throw VerifyError("sampler count must be at least 1");
    if (!(sampler.box > 0.0)) throw VerifyError("sampler box radius must be positive");

    const Lagrangian lag(model);
    const int dim = model.dim();
    const SingularSet sigma = model.singular_set();
    const GrowthConstants& k = model.constants;
    const std::vector<SamplePoint> samples = draw_samples(model, sampler);

    HypothesisReport rep;
    rep.samples = static_cast<int>(samples.size());
    if (rep.samples < sampler.count) rep.warnings.push_back("fewer samples than requested clear the guard distance");

    // Evenness of g, a, V.
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j)
            rep.parity.emplace_back("g[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                    parity_check(model.metric[i][j], 1.0, samples));
    for (int i = 0; i < dim; ++i)
        rep.parity.emplace_back("a[" + std::to_string(i) + "]", parity_check(model.gyro[i], 1.0, samples));
    rep.parity.emplace_back("V", parity_check(model.potential, 1.0, samples));
    for (const auto& [name, c] : rep.parity) rep.parity_ok = rep.parity_ok && c.ok;

    for (std::size_t j = 0; j < model.constraints.size(); ++j) {
        const auto& con = model.constraints[j];
        rep.constraint_parity.emplace_back("f[" + std::to_string(j) + "] " + std::string(to_string(con.parity)),
                                           parity_check(con.f, con.parity == Parity::Odd ? -1.0 : 1.0, samples));
    }

    // Growth bounds.
    for (const auto& p : samples) {
        Eigen::MatrixXd g;
        Eigen::VectorXd a;
        double v;
        try {
            g = lag.metric(p.t, p.z);
            a = lag.gyro(p.t, p.z);
            v = lag.potential(p.t, p.z);
        } catch (const DomainError&) {
            continue;
        }
        const double zn = p.z.norm();
        if (rep.bound_a.ok) {
            const double cap = k.C + k.M * zn;
            for (int i = 0; i < dim; ++i) {
                if (std::abs(a[i]) > cap + kBoundTol * std::max(1.0, cap)) {
                    rep.bound_a.ok = false;
                    rep.bound_a.witness = Witness{p.t, p.z, std::abs(a[i]), cap, "|a[" + std::to_string(i) + "]| vs C + M|z|"};
                    break;
                }
            }
        }
        if (rep.bound_g.ok) {
            const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
            const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
            const double lam = eig[0];
            // Eigenvalue rounding scales with the largest eigenvalue.
            if (0.5 * lam < k.K - kBoundTol * std::max({1.0, k.K, 0.5 * eig[dim - 1]})) {
                rep.bound_g.ok = false;
                rep.bound_g.witness = Witness{p.t, p.z, 0.5 * lam, k.K, "min eigenvalue of g/2 vs K"};
            }
        }
        if (rep.bound_V.ok) {
            double rhs = k.A * zn * zn + k.C1;
            if (!sigma.empty()) {
                const double d = nearest_singular(sigma, p.z).distance;
                rhs -= k.P / (d * d);
            }
            if (v > rhs + kBoundTol * std::max({1.0, std::abs(rhs), std::abs(v)})) {
                rep.bound_V.ok = false;
                rep.bound_V.witness = Witness{p.t, p.z, v, rhs, "V vs A|z|^2 - P/|z-s|^2 + C1"};
            }
        }
    }

    // Rank of the constraint Jacobian on the feasible set.
    if (lag.has_constraints()) {
        const int l = lag.constraint_count();
        const int budget = std::min<int>(static_cast<int>(samples.size()), 400);
        struct Feasible {
            double t;
            Eigen::VectorXd z;
            double smallest;
        };
        std::vector<Feasible> feasible;
        double largest = 0.0;
        for (int s = 0; s < budget; ++s) {
            try {
                const Eigen::MatrixXd j = lag.constraint_jacobian(samples[s].t, samples[s].z);
                if (j.allFinite()) largest = std::max(largest, Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues()[0]);
            } catch (const DomainError&) {
            }
            const auto z = project_to_constraints(lag, samples[s].t, samples[s].z);
            if (!z) continue;
            const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(lag.constraint_jacobian(samples[s].t, *z)).singularValues();
            largest = std::max(largest, sv[0]);
            feasible.push_back({samples[s].t, *z, sv[l - 1]});
        }
        // Numerical rank against the largest singular value seen at any sample, on or off F.
        rep.feasible_points = static_cast<int>(feasible.size());
        for (const auto& f : feasible) {
            const double ratio = largest > 0.0 ? f.smallest / largest : 0.0;
            rep.min_singular_ratio = std::min(rep.min_singular_ratio, ratio);
            if (rep.rank.ok && !(ratio > kRankTol)) {
                rep.rank.ok = false;
                rep.rank.witness = Witness{f.t, f.z, ratio, kRankTol, "smallest singular value of df/dz relative to the largest sampled"};
            }
        }
        if (rep.feasible_points == 0) {
            rep.rank.skipped = true;
            rep.warnings.push_back("no feasible constraint points found; rank check skipped");
        }
    } else {
        rep.rank.skipped = true;
    }

    rep.margin = coercivity_margin(k, model.omega);

    if (!rep.parity_ok) rep.violated.push_back({"condition 1", "parity"});
    for (const auto& [name, c] : rep.constraint_parity)
        if (!c.ok) rep.violated.push_back({"constraint parity", name});
    if (!(rep.margin > 0.0)) rep.violated.push_back({"condition 2", "margin"});
    if (!rep.bound_a.ok) rep.violated.push_back({"growth bounds", "bound_a"});
    if (!rep.bound_g.ok) rep.violated.push_back({"growth bounds", "bound_g"});
    if (!rep.bound_V.ok) rep.violated.push_back({"growth bounds", "bound_V"});
    if (!rep.rank.ok) rep.violated.push_back({"rank", "rank"});
    rep.overall = rep.violated.empty();
    return rep;
}

Eigen::VectorXd recover_multipliers(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual, bool* used_fallback) {
    const Eigen::MatrixXd gram = jacobian * jacobian.transpose();
    const Eigen::VectorXd rhs = jacobian * residual;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    const double dmin = ldlt.vectorD().cwiseAbs().minCoeff();
    const bool near_singular = ldlt.info() != Eigen::Success || !(dmax > 0.0) || dmin < 1e-12 * dmax;
    if (used_fallback) *used_fallback = near_singular;
    if (!near_singular) return ldlt.solve(rhs);
    return jacobian.transpose().completeOrthogonalDecomposition().solve(residual);
}

ResidualReport el_residual(const ModelSpec& model, const FourierTrajectory& traj, int nodes) {
    traj.validate();
    if (traj.dim() != model.dim()) throw VerifyError("trajectory dimension does not match the model");
    const Lagrangian lag(model);
    const SampledPath path = SineBasis(traj.omega, traj.modes(), nodes).sample(traj, true);
    const SingularSet sigma = model.singular_set();
    const int l = lag.constraint_count();

    ResidualReport rep;
    rep.nodes = nodes;
    rep.times = path.t;
    if (l > 0) rep.multipliers.resize(nodes, l);
    double sum_sq = 0.0;
    double sv_largest = 0.0, sv_smallest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nodes; ++i) {
        const double t = path.t[i];
        const Eigen::VectorXd z = path.z.row(i).transpose();
        const Eigen::VectorXd zd = path.zd.row(i).transpose();
        const Eigen::VectorXd zdd = path.zdd.row(i).transpose();
        if (!sigma.empty() && nearest_singular(sigma, z).distance < ActionEvaluator::kMachineGuard)
            throw SingularityError("trajectory hits a singular point at t=" + std::to_string(t));
        Eigen::VectorXd r = lag.residual(t, z, zd, zdd);
        if (l > 0) {
            const Eigen::MatrixXd j = lag.constraint_jacobian(t, z);
            bool fallback = false;
            const Eigen::VectorXd alpha = recover_multipliers(j, r, &fallback);
            if (fallback) ++rep.pseudo_inverse_nodes;
            const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues();
            sv_largest = std::max(sv_largest, sv[0]);
            sv_smallest = std::min(sv_smallest, sv[l - 1]);
            rep.multipliers.row(i) = alpha.transpose();
            r -= j.transpose() * alpha;
            rep.constraint_sup = std::max(rep.constraint_sup, lag.constraint_values(t, z).cwiseAbs().maxCoeff());
            const Eigen::VectorXd rate = lag.constraint_time_derivative(t, z) + j * zd;
            rep.constraint_rate_sup = std::max(rep.constraint_rate_sup, rate.cwiseAbs().maxCoeff());
        }
        rep.el_sup = std::max(rep.el_sup, r.cwiseAbs().maxCoeff());
        sum_sq += r.squaredNorm();
    }
    if (l > 0 && !(sv_smallest > kRankTol * sv_largest)) rep.rank_deficient = true;
    rep.el_l2 = std::sqrt(sum_sq * traj.omega / nodes);
    if (model.is_autonomous()) rep.energy_drift = energy_drift(model, traj, nodes);

    if (!sigma.empty()) {
        const HomotopySignature sig = winding_signature(traj, sigma, nodes);
        rep.min_distance = sig.min_distance;
        rep.clearance_integral = sig.clearance_integral;
    }
    for (int i = 0; i < nodes; ++i)
        for (int j = i + 1; j < nodes; ++j) {
            const double q = (path.z.row(i) - path.z.row(j)).norm() / std::sqrt(path.t[j] - path.t[i]);
            rep.holder_half = std::max(rep.holder_half, q);
        }
    return rep;
}

double energy_drift(const ModelSpec& model, const FourierTrajectory& traj, int nodes) {
    if (!model.is_autonomous()) throw VerifyError("energy drift needs a time-independent model");
    const Lagrangian lag(model);
    const SampledPath path = SineBasis(traj.omega, traj.modes(), nodes).sample(traj, false);
    const double h0 = lag.energy(path.t[0], path.z.row(0).transpose(), path.zd.row(0).transpose());
    double drift = 0.0;
    for (int i = 1; i < nodes; ++i) {
        const double h = lag.energy(path.t[i], path.z.row(i).transpose(), path.zd.row(i).transpose());
        drift = std::max(drift, std::abs(h - h0));
    }
    return drift;
}

std::string to_string(HomotopyVerdict v) { return v == HomotopyVerdict::Homotopic ? "Homotopic" : "Inconclusive"; }

HomotopyVerdict homotopy_equiv_sufficient(const FourierTrajectory& t1, const FourierTrajectory& t2, const SingularSet& s,
                                          double delta) {
    if (!(delta > 0.0)) throw VerifyError("delta must be positive");
    const HomotopySignature s1 = winding_signature(t1, s);
    const HomotopySignature s2 = winding_signature(t2, s);
    if (s1.min_distance < delta || s2.min_distance < delta) throw VerifyError("trajectory clearance is below delta");
    if (t1.dim() != t2.dim() || t1.m != t2.m || t1.nu != t2.nu || std::abs(t1.omega - t2.omega) > 1e-12 * t1.omega)
        return HomotopyVerdict::Inconclusive;

    const int grid = std::max(4096, 32 * std::max(t1.modes(), t2.modes()));
    const SampledPath p1 = sample(t1, grid), p2 = sample(t2, grid);
    const double sup = (p1.z - p2.z).rowwise().norm().maxCoeff();
    if (!(sup < 0.5 * delta)) return HomotopyVerdict::Inconclusive;
    if (s1.windings_defined != s2.windings_defined) return HomotopyVerdict::Inconclusive;
    if (s1.windings_defined && !s1.same_windings(s2)) return HomotopyVerdict::Inconclusive;
    return HomotopyVerdict::Homotopic;
}

}  // namespace lagvar
