// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "lagvar/action.hpp"
#include "lagvar/commands.hpp"
#include "lagvar/optimize.hpp"
#include "lagvar/verify.hpp"
#include "support.hpp"

using namespace lagvar;
using support::kPi;
using support::kTwoPi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << " [failed: " << what << "]";
        }
    }
};

struct Criterion {
    int number;
    std::string title;
    double limit_s;
    std::function<void(Outcome&)> body;
};

int cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    return cli::run(args, out, err);
}

SolveOptions opts(int modes, int nodes) {
    SolveOptions o;
    o.modes = modes;
    o.nodes = nodes;
    return o;
}

ModelSpec from_text(const std::string& text) { return model_from_json(nlohmann::json::parse(text)); }

const fs::path kScratch = fs::temp_directory_path() / "lagvar_acceptance";

// Shared between the tube-and-ball run and the a priori bound check.
std::optional<SolveResult> g_tube;
double g_tube_seed_action = 0.0;

void counterexample(Outcome& o) {
    const ModelSpec model = builtin("forced_oscillator");
    const auto rep = check_hypotheses(model, Sampler{});
    const double expected = 0.5 - kPi * kPi;
    o.detail << "margin " << format_double(rep.margin);
    o.require(rep.violates("condition 2"), "condition 2 flagged");
    o.require(!rep.overall, "overall fail");
    o.require(std::abs(rep.margin - expected) <= 1e-12, "margin equals 0.5 - pi^2");
    o.require(std::abs(rep.margin + 9.369604401) <= 1e-9, "margin matches -9.369604401 to its printed digits");
    o.require(cli({"check", "--builtin", "forced_oscillator", "--out", (kScratch / "c1").string()}) == 2,
              "check exit 2");
    const auto result = solve_in_class(model, {}, SolveOptions{});
    o.detail << ", solve " << to_string(result.status);
    o.require(result.status == SolveStatus::Diverged, "solve Diverged");
    o.require(cli({"solve", "--builtin", "forced_oscillator", "--out", (kScratch / "c1").string()}) == 3,
              "solve exit 3");
}

void parity_rejection(Outcome& o) {
    const auto rep = check_hypotheses(builtin("cylinder"), Sampler{});
    o.require(rep.violated.size() == 1 && rep.violated[0].condition == "condition 1", "only condition 1 violated");
    bool witness = false;
    for (const auto& [name, c] : rep.parity)
        if (!c.ok && c.witness && c.witness->z.norm() > 0.0) {
            witness = true;
            o.detail << name << " witness z = (" << format_double(c.witness->z[0]) << ", "
                     << format_double(c.witness->z[1]) << ")";
        }
    o.require(witness, "nonzero witness");
}

void figure_eight(int coils, Outcome& o) {
    const ModelSpec model = builtin("two_centers", {{"n", 2.0}, {"gamma", 1.0}, {"r0x", 1.0}, {"r0y", 0.0}});
    const Eigen::Vector2d r0(1.0, 0.0);
    ClassSpec cls;
    cls.coils = coils;
    double el24 = 0.0;
    for (int modes : {24, 48}) {
        const auto start = std::chrono::steady_clock::now();
        const auto result = solve_in_class(model, cls, opts(modes, 512));
        const auto res = el_residual(model, result.trajectory, 512);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        o.require(secs < 60.0, "run under 60 s");
        if (modes == 24) {
            el24 = res.el_sup;
            continue;
        }
        o.detail << "coils " << coils << ": " << to_string(result.status) << ", windings ("
                 << result.signature.winding_about(r0).value_or(0) << ", "
                 << result.signature.winding_about(-r0).value_or(0) << "), min_distance "
                 << format_double(result.signature.min_distance) << ", el_sup N=24 " << format_double(el24)
                 << ", N=48 " << format_double(res.el_sup);
        o.require(result.status == SolveStatus::Converged, "Converged");
        o.require(result.signature.winding_about(r0) == -coils && result.signature.winding_about(-r0) == coils,
                  "windings (-m, +m)");
        o.require(result.signature.min_distance > 0.05, "min_distance > 0.05");
        o.require(res.el_sup < 1e-5, "el_sup < 1e-5 at N=48");
        o.require(res.el_sup * 10.0 <= el24, "10x decrease from N=24");
    }
}

void figure_eights(Outcome& o) {
    Outcome one, two;
    figure_eight(1, one);
    figure_eight(2, two);
    o.ok = one.ok && two.ok;
    o.detail << one.detail.str() << "; " << two.detail.str();
}

void tube_and_ball(Outcome& o) {
    const ModelSpec model = builtin("tube_ball", {{"m", 1.0}, {"J", 1.0}, {"g", 9.81}, {"nu", 1}, {"omega", 1.0}});
    const SolveOptions so = opts(32, 256);
    g_tube_seed_action = action(model, FourierTrajectory::zero_for(model, so.modes), so.nodes);
    g_tube = solve_in_class(model, {}, so);
    const auto& z = g_tube->trajectory;
    const auto res = el_residual(model, z, so.nodes);
    double shift_err = 0.0, odd_err = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double t = -1.0 + 0.01 * i;
        shift_err = std::max(shift_err, std::abs(z.position(t + 1.0)[1] - z.position(t)[1] - kTwoPi));
        odd_err = std::max(odd_err, std::abs(z.position(-t)[0] + z.position(t)[0]));
    }
    o.detail << to_string(g_tube->status) << ", el_sup " << format_double(res.el_sup) << ", energy_drift "
             << format_double(res.energy_drift.value_or(NAN)) << ", shift error " << format_double(shift_err);
    o.require(g_tube->status == SolveStatus::Converged, "Converged");
    o.require(z.nu == std::vector<int>{1} && z.drift()[1] * model.omega == kTwoPi, "drift 2 pi per period");
    o.require(shift_err <= 1e-12, "phi(t+omega) - phi(t) = 2 pi");
    o.require(odd_err <= 1e-12, "x odd");
    o.require(res.el_sup < 1e-5, "el_sup < 1e-5");
    o.require(res.energy_drift && *res.energy_drift < 1e-5, "energy_drift < 1e-5");
}

void sweep(Outcome& o) {
    const fs::path dir = kScratch / "sweep";
    fs::remove_all(dir);
    const int code = cli({"sweep", "--builtin", "two_centers", "--coils", "1", "--modes", "48", "--jobs", "3", "--omegas",
                          "6.283185307179586,3.141592653589793,1.5707963267948966", "--out", dir.string()});
    o.require(code == 0, "exit 0");
    std::istringstream in(read_file(dir / "summary.csv"));
    std::string line;
    std::getline(in, line);
    std::vector<double> actions;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        o.require(cells.size() == 6 && cells[1] == "Converged", "row Converged");
        if (cells.size() == 6 && cells[1] == "Converged") actions.push_back(std::stod(cells[2]));
    }
    o.require(actions.size() == 3, "3 rows");
    o.detail << "S =";
    for (double s : actions) o.detail << " " << format_double(s);
    for (std::size_t i = 0; i < actions.size(); ++i)
        for (std::size_t j = i + 1; j < actions.size(); ++j)
            o.require(std::abs(actions[i] - actions[j]) > 1e-3, "pairwise |dS| > 1e-3");
}

void analytic(Outcome& o) {
    std::mt19937_64 rng(6);
    const ModelSpec drift = support::load("free_drift.json");
    const auto a = minimize(drift, support::random_for(rng, drift, 8, 0.3), opts(8, 64));
    const ModelSpec osc = support::load("harmonic.json");
    const auto b = minimize(osc, support::random_for(rng, osc, 8, 0.05), opts(8, 64));
    o.detail << "drift S - pi = " << format_double(a.report.S - kPi) << ", oscillator S = " << format_double(b.report.S);
    o.require(a.status == SolveStatus::Converged, "drift Converged");
    o.require(a.trajectory.coeffs.cwiseAbs().maxCoeff() <= 1e-8, "drift b = 0");
    o.require(std::abs(a.report.S - kPi) <= 1e-8, "S = pi");
    o.require(osc.omega == 0.1 && osc.constants.A >= 0.25, "oscillator at omega 0.1");
    o.require(b.status == SolveStatus::Converged, "oscillator Converged");
    o.require(b.trajectory.coeffs.cwiseAbs().maxCoeff() <= 1e-8, "z = 0");
    o.require(std::abs(b.report.S) <= 1e-10, "S = 0");
}

void gradient_oracle(Outcome& o) {
    const ModelSpec gyro = from_text(R"J({"m": 1, "n": 1, "omega": 2.0, "nu": [1],
        "metric": [["1 + 0.2*cos(z2)", "0.1*sin(z1)*sin(z2)"], ["0.1*sin(z1)*sin(z2)", "2 + z1^2"]],
        "gyro": ["0.3*z1^2 + 0.1*t*z2", "0.2*cos(z1) + 0.1*sin(t)*sin(z1)"],
        "potential": "cos(z2) + 0.5*z1^2*cos(t) + 0.1*t*z1"})J");
    const std::vector<std::pair<ModelSpec, double>> pool = {
        {builtin("two_centers"), 0.3},          {builtin("two_centers", {{"n", 3}, {"gamma", 0.5}}), 0.3},
        {builtin("surface_slide", {{"g", 1.0}}), 0.25}, {builtin("tube_ball"), 1.0},
        {builtin("cylinder"), 1.0},              {builtin("forced_oscillator"), 1.0},
        {gyro, 0.8},                             {support::load("constrained_pair.json"), 1.0},
    };
    std::mt19937_64 rng(99);
    int passed = 0;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto& [model, amp] = pool[i % pool.size()];
        const Lagrangian lag(model);
        const int modes = 3 + i % 4;
        const ActionEvaluator ev(lag, model.omega, modes, 64);
        const auto traj = support::random_for(rng, model, modes, amp);
        const double mu = lag.has_constraints() ? 10.0 : 0.0;
        const Eigen::MatrixXd g = ev.evaluate(traj, mu, true).gradient;
        Eigen::MatrixXd fd(modes, traj.dim());
        for (int k = 0; k < modes; ++k)
            for (int d = 0; d < traj.dim(); ++d) {
                auto p = traj, m = traj;
                p.coeffs(k, d) += 1e-6;
                m.coeffs(k, d) -= 1e-6;
                fd(k, d) = (ev.evaluate(p, mu, false).objective - ev.evaluate(m, mu, false).objective) / 2e-6;
            }
        const double err = (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
        worst = std::max(worst, err);
        passed += err <= 1e-6;
    }
    o.detail << passed << "/200 pairs, worst relative error " << format_double(worst);
    o.require(passed == 200, "all pairs within 1e-6");
}

void odd_bounds(Outcome& o) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> modes(1, 12);
    std::uniform_real_distribution<double> period(0.5, 8.0);
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto traj = support::random_trajectory(rng, period(rng), 1, {}, modes(rng), 1.0);
        for (double frac : {0.25, 0.5, 1.0}) {
            const auto r = odd_bound_check(traj, 0, frac * traj.omega);
            failures += !r.holds_l2 + !r.holds_c;
        }
    }
    auto s = FourierTrajectory::zero(kTwoPi, 1, {}, 1);
    s.coeffs(0, 0) = 1.0;
    const double l2 = odd_bound_check(s, 0, kTwoPi).lhs_l2;
    o.detail << failures << " violations, ||sin||^2 - pi = " << format_double(l2 - kPi);
    o.require(failures == 0, "both inequalities hold");
    o.require(std::abs(l2 - kPi) <= 1e-10, "closed form");
}

void symmetry(Outcome& o) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const SingularSet pair = builtin("two_centers").singular_set();
    double odd = 0.0, shift = 0.0;
    int antisym_fail = 0, defined = 0;
    for (int i = 0; i < 100; ++i) {
        const int n = i % 3;
        std::vector<int> nu(n);
        for (auto& v : nu) v = static_cast<int>(u(rng));
        const auto traj = support::random_trajectory(rng, 0.5 + std::abs(u(rng)), 2, nu, 10, 2.0);
        for (int k = 0; k < 5; ++k) {
            const double t = u(rng);
            odd = std::max(odd, (traj.position(-t) + traj.position(t)).cwiseAbs().maxCoeff());
            Eigen::VectorXd d = traj.position(t + traj.omega) - traj.position(t);
            for (int j = 0; j < n; ++j) d[2 + j] -= kTwoPi * nu[j];
            shift = std::max(shift, d.cwiseAbs().maxCoeff());
        }
        auto planar = support::random_trajectory(rng, kTwoPi, 2, {}, 6, 2.0);
        try {
            const auto sig = winding_signature(planar, pair);
            ++defined;
            antisym_fail += *sig.winding_about(Eigen::Vector2d(1, 0)) != -*sig.winding_about(Eigen::Vector2d(-1, 0));
        } catch (const WindingError&) {
        }
    }
    o.detail << "oddness " << format_double(odd) << ", shift " << format_double(shift) << ", antisymmetry "
             << defined - antisym_fail << "/" << defined;
    o.require(odd <= 1e-12, "oddness");
    o.require(shift <= 1e-10, "shift identity");
    o.require(antisym_fail == 0 && defined > 0, "winding antisymmetry");
}

void multipliers(Outcome& o) {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int c = 0; c < 50; ++c) {
        // Odd constraints f_j = a_j . z + 0.1 sin(c_j . z) in dimension d.
        const int d = 2 + c % 4;
        const int l = 1 + c % (d - 1);
        std::string metric = "[", cons = "[";
        for (int r = 0; r < d; ++r) {
            metric += std::string(r ? "," : "") + "[";
            for (int k = 0; k < d; ++k) metric += std::string(k ? "," : "") + (r == k ? "\"1\"" : "\"0\"");
            metric += "]";
        }
        metric += "]";
        for (int j = 0; j < l; ++j) {
            std::string lin, arg;
            for (int k = 0; k < d; ++k) {
                lin += (k ? " + " : "") + format_double(normal(rng)) + "*z" + std::to_string(k + 1);
                arg += (k ? " + " : "") + format_double(normal(rng)) + "*z" + std::to_string(k + 1);
            }
            cons += std::string(j ? "," : "") + "{\"f\": \"" + lin + " + 0.1*sin(" + arg + ")\", \"parity\": \"odd\"}";
        }
        cons += "]";
        const ModelSpec model = from_text("{\"m\": " + std::to_string(d) + ", \"n\": 0, \"omega\": 1, \"metric\": " +
                                          metric + ", \"constraints\": " + cons + "}");
        const Lagrangian lag(model);
        Eigen::VectorXd z(d), beta(l);
        for (int k = 0; k < d; ++k) z[k] = normal(rng);
        for (int j = 0; j < l; ++j) beta[j] = normal(rng);
        const Eigen::MatrixXd jac = lag.constraint_jacobian(0.3, z);
        const Eigen::VectorXd alpha = recover_multipliers(jac, jac.transpose() * beta);
        worst = std::max(worst, (alpha - beta).cwiseAbs().maxCoeff());
    }
    o.detail << "worst |alpha - beta| " << format_double(worst);
    o.require(worst <= 1e-8, "recovery within 1e-8");
}

void apriori(Outcome& o) {
    if (!g_tube) tube_and_ball(o);
    const ModelSpec model = builtin("tube_ball", {{"m", 1.0}, {"J", 1.0}, {"g", 9.81}, {"nu", 1}, {"omega", 1.0}});
    const GrowthConstants& k = model.constants;
    o.require(g_tube->status == SolveStatus::Converged, "minimizer Converged");
    const double h1 = h1_seminorm(g_tube->trajectory);
    const double radius = apriori_radius(k, model.omega, g_tube_seed_action);
    const double lhs = g_tube->report.S + k.C1 * model.omega;
    const double bound = action_lower_bound(k, model.omega, h1);
    o.detail << "|z*| " << format_double(h1) << " <= " << format_double(radius) << ", S + C1 omega "
             << format_double(lhs) << " >= " << format_double(bound);
    o.require(h1 <= radius, "norm within radius");
    o.require(lhs >= bound, "action lower bound");
}

}  // namespace

int main() {
    fs::create_directories(kScratch);
    const std::vector<Criterion> criteria = {
        {1, "counterexample rejection", 5.0, counterexample},
        {2, "parity rejection", 1.0, parity_rejection},
        {3, "figure-eight existence", 120.0, figure_eights},
        {4, "tube and ball", 30.0, tube_and_ball},
        {5, "omega sweep multiplicity", 180.0, sweep},
        {6, "analytic minimizers", 10.0, analytic},
        {7, "gradient oracle", 60.0, gradient_oracle},
        {8, "odd function bounds", 10.0, odd_bounds},
        {9, "structural symmetry", 10.0, symmetry},
        {10, "multiplier recovery", 10.0, multipliers},
        {11, "a priori bound", 30.0, apriori},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.body(o);
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs >= c.limit_s) o.require(false, "runtime limit " + format_double(c.limit_s) + " s");
        failed += !o.ok;
        std::printf("%s criterion %d (%s, %.2f s): %s\n", o.ok ? "PASS" : "FAIL", c.number, c.title.c_str(), secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
