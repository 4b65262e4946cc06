#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "lagvar/optimize.hpp"
#include "lagvar/verify.hpp"
#include "support.hpp"

using namespace lagvar;
using support::kPi;
using support::kTwoPi;

namespace {

SolveOptions options(int modes, int nodes) {
    SolveOptions o;
    o.modes = modes;
    o.nodes = nodes;
    return o;
}

FourierTrajectory sine_seed(double c, int modes) {
    auto traj = FourierTrajectory::zero(kTwoPi, 1, {}, modes);
    traj.coeffs(0, 0) = c;
    return traj;
}

// Objective is non-increasing inside each penalty phase, up to the rounding band.
void check_monotone(const std::vector<IterationRecord>& history) {
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].phase != history[i - 1].phase) continue;
        const double prev = history[i - 1].objective;
        CHECK(history[i].objective <= prev + 1e-13 * std::abs(prev));
    }
}

}  // namespace

TEST_CASE("options validation") {
    CHECK_NOTHROW(SolveOptions{}.validate());
    auto bad = [](auto mutate) {
        SolveOptions o;
        mutate(o);
        CHECK_THROWS_AS(o.validate(), OptionsError);
    };
    bad([](SolveOptions& o) { o.modes = 0; });
    bad([](SolveOptions& o) { o.nodes = 2 * o.modes; });
    bad([](SolveOptions& o) { o.max_iters = 0; });
    bad([](SolveOptions& o) { o.grad_tol = 0.0; });
    bad([](SolveOptions& o) { o.step_tol = -1.0; });
    bad([](SolveOptions& o) { o.guard_delta = 0.0; });
    bad([](SolveOptions& o) { o.penalty_mu0 = 0.0; });
    bad([](SolveOptions& o) { o.penalty_growth = 1.0; });
    bad([](SolveOptions& o) { o.diverge_factor = 0.0; });
    bad([](SolveOptions& o) { o.memory = 0; });

    const ModelSpec model = support::load("harmonic.json");
    SolveOptions o = options(8, 10);
    CHECK_THROWS_AS(minimize(model, FourierTrajectory::zero_for(model, 8), o), OptionsError);
}

TEST_CASE("free drift relaxes to the linear drift") {
    const ModelSpec model = support::load("free_drift.json");
    std::mt19937_64 rng(11);
    auto seed = support::random_for(rng, model, 8, 0.3);
    const auto result = minimize(model, seed, options(8, 64));
    REQUIRE(result.status == SolveStatus::Converged);
    CHECK(result.trajectory.coeffs.cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(result.report.S - kPi) <= 1e-8);
    CHECK(result.report.grad_norm <= 1e-9);
    check_monotone(result.history);
}

TEST_CASE("coercive oscillator relaxes to rest") {
    const ModelSpec model = support::load("harmonic.json");
    CHECK(coercivity_margin(model.constants, model.omega) == doctest::Approx(0.49875));
    std::mt19937_64 rng(12);
    auto seed = support::random_for(rng, model, 8, 0.05);
    const auto result = minimize(model, seed, options(8, 64));
    REQUIRE(result.status == SolveStatus::Converged);
    CHECK(std::abs(result.report.S) <= 1e-10);
    CHECK(result.trajectory.coeffs.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("forced oscillator diverges along the sine ray") {
    const ModelSpec model = builtin("forced_oscillator");
    for (double c : {-3.0, 0.5, 2.0, 7.0}) {
        const double s = action(model, sine_seed(c, 4), 64);
        CHECK(s == doctest::Approx(0.5 * kPi * (2 * c - 1)).epsilon(1e-12));
    }
    for (double scale : {1.0, 2.0, 4.0}) {
        CAPTURE(scale);
        const auto result = minimize(model, sine_seed(-scale, 16), options(16, 256));
        CHECK(result.status == SolveStatus::Diverged);
        CHECK(result.report.S < result.seed_action);
        check_monotone(result.history);
    }
}

TEST_CASE("two-center figure eight with one and three coils") {
    const ModelSpec model = builtin("two_centers", {{"n", 2.0}});
    const Eigen::Vector2d r0(1.0, 0.0);
    for (int coils : {1, 3}) {
        CAPTURE(coils);
        const int modes = coils == 1 ? 48 : 64;
        ClassSpec cls;
        cls.coils = coils;
        const auto result = solve_in_class(model, cls, options(modes, 1024));
        REQUIRE(result.status == SolveStatus::Converged);
        CHECK(result.signature.winding_about(r0) == -coils);
        CHECK(result.signature.winding_about(-r0) == coils);
        CHECK(result.signature.same_windings(result.seed_signature));
        CHECK(result.report.min_distance > 0.05);
        CHECK(result.report.S < result.seed_action);
        check_monotone(result.history);
        if (coils == 1) {
            const auto res = el_residual(model, result.trajectory, 512);
            CHECK(res.el_sup < 1e-6);
        }
    }
}

TEST_CASE("tube and ball solution turns once per period") {
    const ModelSpec model = builtin("tube_ball", {{"omega", 1.0}});
    const auto result = solve_in_class(model, {}, options(32, 256));
    REQUIRE(result.status == SolveStatus::Converged);
    const auto& z = result.trajectory;
    for (double t : {0.0, 0.13, 0.4, 0.77}) {
        CHECK(z.position(t + 1.0)(1) - z.position(t)(1) == doctest::Approx(kTwoPi).epsilon(1e-14));
        CHECK(std::abs(z.position(-t)(0) + z.position(t)(0)) <= 1e-12);
    }
}

TEST_CASE("constrained pair approaches the constrained minimizer") {
    const ModelSpec model = support::load("constrained_pair.json");
    std::vector<IterationRecord> log;
    const auto result = minimize(model, FourierTrajectory::zero_for(model, 8), options(8, 64),
                                 [&](const IterationRecord& r) { log.push_back(r); });
    REQUIRE(result.status == SolveStatus::Converged);
    CHECK(result.constraint_sq <= 1e-8);
    CHECK(result.final_mu == doctest::Approx(1e8));
    CHECK(result.trajectory.coeffs(0, 0) == doctest::Approx(-1.0 / 6.0).epsilon(1e-6));
    CHECK(result.trajectory.coeffs(0, 1) == doctest::Approx(-1.0 / 6.0).epsilon(1e-6));
    CHECK(log.size() == result.history.size());

    // Last constraint residual of each phase decreases.
    std::vector<double> phase_end;
    for (std::size_t i = 0; i < result.history.size(); ++i)
        if (i + 1 == result.history.size() || result.history[i + 1].phase != result.history[i].phase)
            phase_end.push_back(result.history[i].constraint_sq);
    REQUIRE(phase_end.size() >= 2);
    for (std::size_t i = 1; i < phase_end.size(); ++i) CHECK(phase_end[i] <= phase_end[i - 1]);
    check_monotone(result.history);
}

TEST_CASE("identical inputs give identical histories") {
    const ModelSpec model = builtin("two_centers");
    ClassSpec cls;
    cls.coils = 1;
    const auto a = solve_in_class(model, cls, options(16, 256));
    const auto b = solve_in_class(model, cls, options(16, 256));
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].objective == b.history[i].objective);
        CHECK(a.history[i].grad_norm == b.history[i].grad_norm);
    }
    CHECK((a.trajectory.coeffs.array() == b.trajectory.coeffs.array()).all());
}

TEST_CASE("seed too close to sigma triggers the guard") {
    const ModelSpec model = builtin("two_centers");
    auto seed = FourierTrajectory::zero_for(model, 4);
    seed.coeffs(0, 0) = 1.0;  // passes through (1, 0) at t = omega/4
    SolveOptions o = options(4, 64);
    const auto result = minimize(model, seed, o);
    CHECK(result.status == SolveStatus::GuardTriggered);
    CHECK(result.iterations == 0);
}

TEST_CASE("seed must match the model") {
    const ModelSpec model = builtin("tube_ball");
    auto wrong_nu = FourierTrajectory::zero(model.omega, 1, {2}, 8);
    CHECK_THROWS(minimize(model, wrong_nu, options(8, 64)));
    auto wrong_omega = FourierTrajectory::zero(2.0, 1, {1}, 8);
    CHECK_THROWS(minimize(model, wrong_omega, options(8, 64)));
    ClassSpec cls;
    cls.coils = 0;
    CHECK_THROWS_AS(solve_in_class(builtin("two_centers"), cls, options(16, 256)), TrajectoryError);
}
