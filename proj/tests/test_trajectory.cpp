#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "lagvar/trajectory.hpp"
#include "support.hpp"

using namespace lagvar;
using support::kPi;
using support::kTwoPi;

namespace {

const SingularSet kPair({Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0)}, 2, 0);

FourierTrajectory lemniscate(double omega) {
    auto t = FourierTrajectory::zero(omega, 2, {}, 2);
    t.coeffs(0, 0) = 2.0;  // 2 sin tau
    t.coeffs(1, 1) = 1.0;  // 2 sin tau cos tau = sin 2 tau
    return t;
}

// Turning number by brute-force angle accumulation on a dense grid.
double brute_winding(const FourierTrajectory& traj, const Eigen::Vector2d& c, int nodes) {
    double total = 0.0;
    Eigen::Vector2d prev = traj.position(0.0).head<2>() - c;
    for (int i = 1; i <= nodes; ++i) {
        const Eigen::Vector2d cur = traj.position(traj.omega * i / nodes).head<2>() - c;
        total += std::atan2(prev.x() * cur.y() - prev.y() * cur.x(), prev.dot(cur));
        prev = cur;
    }
    return total / kTwoPi;
}

}  // namespace

TEST_CASE("sample examples") {
    auto s = FourierTrajectory::zero(kTwoPi, 1, {}, 1);
    s.coeffs(0, 0) = 1.0;
    const SampledPath p = sample(s, 4);
    const double expect[] = {0, 1, 0, -1};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(p.z(i, 0) - expect[i]) <= 1e-15);

    const auto drift = FourierTrajectory::zero(kTwoPi, 0, {1}, 1);
    const SampledPath q = sample(drift, 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(q.z(i, 0) == doctest::Approx(i * kPi / 2));
        CHECK(q.zd(i, 0) == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(sample(s.with_modes(3), 6), TrajectoryError);
}

TEST_CASE("acceleration samples are the basis second derivative") {
    std::mt19937_64 rng(3);
    const auto traj = support::random_trajectory(rng, 3.0, 2, {1}, 7, 0.5);
    const int nodes = 64;
    const SampledPath p = sample(traj, nodes);
    for (int i = 0; i < nodes; ++i) {
        for (int d = 0; d < traj.dim(); ++d) {
            double acc = 0.0;
            for (int k = 1; k <= traj.modes(); ++k) {
                const double w = kTwoPi * k / traj.omega;
                acc -= w * w * traj.coeffs(k - 1, d) * std::sin(w * p.t[i]);
            }
            CHECK(p.zdd(i, d) == doctest::Approx(acc).epsilon(1e-12).scale(1));
        }
        CHECK(p.zd.row(i).isApprox(traj.velocity(p.t[i]).transpose(), 1e-12));
    }
}

TEST_CASE("h1_seminorm examples") {
    auto s = FourierTrajectory::zero(kTwoPi, 1, {}, 1);
    s.coeffs(0, 0) = 1.0;
    CHECK(h1_seminorm(s) * h1_seminorm(s) == doctest::Approx(kPi));
    const auto drift = FourierTrajectory::zero(kTwoPi, 0, {1}, 3);
    CHECK(h1_seminorm(drift) * h1_seminorm(drift) == doctest::Approx(kTwoPi));
    CHECK(h1_seminorm(FourierTrajectory::zero(1.0, 2, {}, 4)) == 0.0);
}

TEST_CASE("Parseval agrees with dense quadrature") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        const auto traj = support::random_trajectory(rng, 0.5 + i, 1, {i % 3 - 1}, 8, 1.0);
        const int nodes = 256;
        const SampledPath p = sample(traj, nodes);
        const double quad = p.zd.rowwise().squaredNorm().sum() * traj.omega / nodes;
        CHECK(h1_seminorm(traj) * h1_seminorm(traj) == doctest::Approx(quad).epsilon(1e-10));
    }
}

TEST_CASE("winding of a circle") {
    std::vector<Eigen::Vector2d> pts;
    const int n = 64;
    for (int i = 0; i < n; ++i) pts.emplace_back(std::cos(kTwoPi * i / n), std::sin(kTwoPi * i / n));
    double inc = 0;
    CHECK(winding_of_polygon(pts, Eigen::Vector2d::Zero(), &inc) == doctest::Approx(1.0));
    CHECK(inc == doctest::Approx(kTwoPi / n));
    CHECK(winding_of_polygon(pts, Eigen::Vector2d(3, 0)) == doctest::Approx(0.0).scale(1));
    std::reverse(pts.begin(), pts.end());
    CHECK(winding_of_polygon(pts, Eigen::Vector2d::Zero()) == doctest::Approx(-1.0));
}

TEST_CASE("winding signature of the lemniscate") {
    const auto lem = lemniscate(kTwoPi);
    const auto sig = winding_signature(lem, kPair);
    REQUIRE(sig.windings_defined);
    CHECK(sig.winding_about(Eigen::Vector2d(1, 0)) == -1);
    CHECK(sig.winding_about(Eigen::Vector2d(-1, 0)) == 1);
    CHECK(brute_winding(lem, Eigen::Vector2d(1, 0), 4096) == doctest::Approx(-1.0));
    CHECK(brute_winding(lem, Eigen::Vector2d(-1, 0), 4096) == doctest::Approx(1.0));
    // The curve passes through (2, 0) and (-2, 0): distance 1 from the nearer center.
    CHECK(sig.min_distance <= 1.0 + 1e-12);
    CHECK(sig.min_distance > 0.5);

    const auto none = winding_signature(lem, SingularSet());
    CHECK(none.windings.empty());
    CHECK(std::isinf(none.min_distance));
}

TEST_CASE("winding refinement cap") {
    // A curve through a singular point cannot be classified.
    auto t = FourierTrajectory::zero(kTwoPi, 2, {}, 2);
    t.coeffs(0, 0) = 1.0;
    t.coeffs(1, 1) = 1e-9;
    CHECK_THROWS_AS(winding_signature(t, kPair, 64, 1 << 12), WindingError);
}

TEST_CASE("seed curves") {
    for (int coils : {1, 2, 3}) {
        const auto seed = seed_curve(coils, kPair, kTwoPi, 32);
        const auto sig = winding_signature(seed, kPair);
        CHECK(sig.winding_about(Eigen::Vector2d(1, 0)) == -coils);
        CHECK(sig.winding_about(Eigen::Vector2d(-1, 0)) == coils);
        CHECK(sig.min_distance > 0.05);
        // The unprojected curve has the same windings.
        std::vector<Eigen::Vector2d> pts;
        for (int i = 0; i < 4096; ++i) pts.push_back(seed_curve_point(coils, Eigen::Vector2d(1, 0), kTwoPi, kTwoPi * i / 4096));
        CHECK(winding_of_polygon(pts, Eigen::Vector2d(1, 0)) == doctest::Approx(-coils));
    }
    // One mode is a segment through the origin: no winding survives.
    CHECK_THROWS_AS(seed_curve(1, kPair, kTwoPi, 1), TrajectoryError);
    // Two modes either keep the class with clearance or are rejected.
    try {
        const auto low = seed_curve(1, kPair, kTwoPi, 2);
        const auto sig = winding_signature(low, kPair);
        CHECK(sig.winding_about(Eigen::Vector2d(1, 0)) == -1);
        CHECK(sig.min_distance > 0.05);
    } catch (const TrajectoryError&) {
    }
    CHECK_THROWS_AS(seed_curve(3, kPair, kTwoPi, 3), TrajectoryError);
    CHECK_THROWS_AS(seed_curve(1, SingularSet(), kTwoPi, 32), TrajectoryError);
    CHECK_THROWS_AS(seed_curve(0, kPair, kTwoPi, 32), TrajectoryError);
}

TEST_CASE("structural oddness and shift identity") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int i = 0; i < 100; ++i) {
        const int n = i % 3;
        std::vector<int> nu(n);
        for (auto& v : nu) v = static_cast<int>(u(rng)) % 4;
        const auto traj = support::random_trajectory(rng, 0.5 + std::abs(u(rng)), 2, nu, 10, 2.0);
        const double t = u(rng);
        CHECK((traj.position(-t) + traj.position(t)).norm() <= 1e-12);
        Eigen::VectorXd shift = traj.position(t + traj.omega) - traj.position(t);
        for (int j = 0; j < n; ++j) shift[2 + j] -= kTwoPi * nu[j];
        CHECK(shift.norm() <= 1e-10);
        CHECK(traj.position(0.0).norm() == 0.0);
    }
}

TEST_CASE("odd antiderivative is periodic") {
    // W(t) = int_0^t u for an odd trig polynomial u.
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
        const auto traj = support::random_trajectory(rng, 2.0 + i * 0.1, 1, {}, 6, 1.0);
        auto u = [&](double s) { return traj.position(s)[0]; };
        const double t = 0.37 * i;
        const double w0 = gauss_legendre(u, 0.0, t, 16);
        const double w1 = gauss_legendre(u, 0.0, t + traj.omega, 32);
        CHECK(std::abs(w1 - w0) <= 1e-12);
    }
}

TEST_CASE("winding antisymmetry") {
    std::mt19937_64 rng(31);
    int defined = 0;
    for (int i = 0; i < 100; ++i) {
        auto traj = support::random_trajectory(rng, kTwoPi, 2, {}, 6, 2.0);
        HomotopySignature sig;
        try {
            sig = winding_signature(traj, kPair);
        } catch (const WindingError&) {
            continue;
        }
        REQUIRE(sig.windings_defined);
        CHECK(*sig.winding_about(Eigen::Vector2d(1, 0)) == -*sig.winding_about(Eigen::Vector2d(-1, 0)));
        ++defined;
    }
    CHECK(defined > 90);
}

TEST_CASE("negation and mode changes") {
    std::mt19937_64 rng(2);
    const auto traj = support::random_trajectory(rng, 1.5, 1, {2}, 5, 1.0);
    const auto neg = traj.negated();
    CHECK(neg.nu == std::vector<int>{-2});
    CHECK((neg.position(0.3) + traj.position(0.3)).norm() <= 1e-14);
    const auto wide = traj.with_modes(9);
    CHECK(wide.modes() == 9);
    CHECK((wide.position(0.4) - traj.position(0.4)).norm() <= 1e-14);
    CHECK(traj.with_modes(2).coeffs.rows() == 2);
    auto bad = traj;
    bad.coeffs(0, 0) = NAN;
    CHECK_THROWS_AS(bad.validate(), TrajectoryError);
}

TEST_CASE("odd function bounds examples") {
    auto s = FourierTrajectory::zero(kTwoPi, 1, {}, 1);
    s.coeffs(0, 0) = 1.0;
    const auto r = odd_bound_check(s, 0, kTwoPi);
    CHECK(r.lhs_l2 == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(std::abs(r.lhs_l2 - kPi) <= 1e-10);
    CHECK(r.rhs_l2 == doctest::Approx(2 * kPi * kPi * kPi));
    CHECK(r.lhs_c == doctest::Approx(1.0));
    CHECK(r.rhs_c == doctest::Approx(kTwoPi * kPi));
    CHECK(r.holds_l2);
    CHECK(r.holds_c);

    const auto z = odd_bound_check(FourierTrajectory::zero(kTwoPi, 1, {}, 3), 0, 1.0);
    CHECK(z.lhs_l2 == 0.0);
    CHECK(z.rhs_l2 == 0.0);
    CHECK(z.holds_l2);
    CHECK(z.holds_c);
}

TEST_CASE("odd function bounds on random sine polynomials") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 200; ++i) {
        const auto traj = support::random_trajectory(rng, 1.0 + i % 7, 1, {}, 1 + i % 9, 1.0);
        for (double frac : {0.25, 0.5, 1.0}) {
            const auto r = odd_bound_check(traj, 0, frac * traj.omega);
            CHECK(r.holds_l2);
            CHECK(r.holds_c);
        }
    }
}
