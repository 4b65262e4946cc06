#include "lagvar/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lagvar {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

// ---------------------------------------------------------------------------
// FourierTrajectory

FourierTrajectory FourierTrajectory::zero(double omega, int m, std::vector<int> nu, int modes) {
    FourierTrajectory traj;
    traj.omega = omega;
    traj.m = m;
    traj.coeffs = Eigen::MatrixXd::Zero(modes, m + static_cast<int>(nu.size()));
    traj.nu = std::move(nu);
    traj.validate();
    return traj;
}

FourierTrajectory FourierTrajectory::zero_for(const ModelSpec& model, int modes) {
    return zero(model.omega, model.m, model.nu, modes);
}

double FourierTrajectory::frequency(int k) const { return kTwoPi * k / omega; }

Eigen::VectorXd FourierTrajectory::drift() const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim());
    for (int j = 0; j < n(); ++j) c[m + j] = kTwoPi * nu[j] / omega;
    return c;
}

Eigen::VectorXd FourierTrajectory::position(double t) const {
    Eigen::VectorXd z = drift() * t;
    for (int k = 1; k <= modes(); ++k) z += std::sin(frequency(k) * t) * coeffs.row(k - 1).transpose();
    return z;
}

Eigen::VectorXd FourierTrajectory::velocity(double t) const {
    Eigen::VectorXd z = drift();
    for (int k = 1; k <= modes(); ++k) {
        const double w = frequency(k);
        z += w * std::cos(w * t) * coeffs.row(k - 1).transpose();
    }
    return z;
}

Eigen::VectorXd FourierTrajectory::acceleration(double t) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim());
    for (int k = 1; k <= modes(); ++k) {
        const double w = frequency(k);
        z -= w * w * std::sin(w * t) * coeffs.row(k - 1).transpose();
    }
    return z;
}

FourierTrajectory FourierTrajectory::negated() const {
    FourierTrajectory out = *this;
    out.coeffs = -coeffs;
    for (int& v : out.nu) v = -v;
    return out;
}

FourierTrajectory FourierTrajectory::with_modes(int new_modes) const {
    FourierTrajectory out = *this;
    out.coeffs = Eigen::MatrixXd::Zero(new_modes, dim());
    const int keep = std::min(new_modes, modes());
    out.coeffs.topRows(keep) = coeffs.topRows(keep);
    return out;
}

void FourierTrajectory::validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw TrajectoryError("trajectory period must be positive");
    if (m < 0 || m + n() != dim()) throw TrajectoryError("coefficient columns must equal m + n");
    if (modes() < 1) throw TrajectoryError("trajectory needs at least one mode");
    if (!coeffs.allFinite()) throw TrajectoryError("trajectory coefficients must be finite");
}

// ---------------------------------------------------------------------------
// Sampling

SineBasis::SineBasis(double omega, int modes, int nodes) : omega_(omega), modes_(modes), nodes_(nodes) {
    if (nodes < 2 * modes + 1)
        throw TrajectoryError("node count " + std::to_string(nodes) + " is below 2N+1 = " + std::to_string(2 * modes + 1));
    t_.resize(nodes);
    kappa_.resize(modes);
    sin_.resize(nodes, modes);
    cos_.resize(nodes, modes);
    for (int k = 1; k <= modes; ++k) kappa_[k - 1] = kTwoPi * k / omega;
    for (int i = 0; i < nodes; ++i) {
        t_[i] = omega * i / nodes;
        for (int k = 1; k <= modes; ++k) {
            // Reduce k*i modulo M so every table entry is computed from an angle in [0, 2 pi).
            const long r = (static_cast<long>(k) * i) % nodes;
            const double angle = kTwoPi * static_cast<double>(r) / nodes;
            sin_(i, k - 1) = std::sin(angle);
            cos_(i, k - 1) = std::cos(angle);
        }
    }
}

SampledPath SineBasis::sample(const FourierTrajectory& traj, bool with_acceleration) const {
    if (traj.modes() != modes_ || traj.omega != omega_) throw TrajectoryError("basis does not match trajectory");
    SampledPath p;
    p.t = t_;
    const Eigen::VectorXd c = traj.drift();
    p.z = sin_ * traj.coeffs + t_ * c.transpose();
    const Eigen::MatrixXd scaled = kappa_.asDiagonal() * traj.coeffs;
    p.zd = cos_ * scaled;
    p.zd.rowwise() += c.transpose();
    if (with_acceleration) p.zdd = -(sin_ * (kappa_.asDiagonal() * scaled));
    return p;
}

SampledPath sample(const FourierTrajectory& traj, int nodes) {
    traj.validate();
    return SineBasis(traj.omega, traj.modes(), nodes).sample(traj);
}

double h1_seminorm(const FourierTrajectory& traj) {
    const Eigen::VectorXd c = traj.drift();
    double sum = traj.omega * c.squaredNorm();
    for (int k = 1; k <= traj.modes(); ++k) {
        const double w = traj.frequency(k);
        sum += w * w * traj.coeffs.row(k - 1).squaredNorm() * 0.5 * traj.omega;
    }
    return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Winding signature

double winding_of_polygon(const std::vector<Eigen::Vector2d>& points, const Eigen::Vector2d& center,
                          double* max_increment) {
    const std::size_t count = points.size();
    double total = 0.0;
    double largest = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const Eigen::Vector2d a = points[i] - center;
        const Eigen::Vector2d b = points[(i + 1) % count] - center;
        // Principal value of the angle from a to b.
        const double d = std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
        total += d;
        largest = std::max(largest, std::abs(d));
    }
    if (max_increment) *max_increment = largest;
    return total / kTwoPi;
}

std::optional<int> HomotopySignature::winding_about(const Eigen::Vector2d& point) const {
    for (const auto& [p, w] : windings)
        if ((p - point).norm() <= 1e-12 * (1.0 + point.norm())) return w;
    return std::nullopt;
}

bool HomotopySignature::same_windings(const HomotopySignature& other) const {
    if (windings_defined != other.windings_defined) return false;
    if (windings.size() != other.windings.size()) return false;
    for (const auto& [p, w] : windings) {
        auto o = other.winding_about(p);
        if (!o || *o != w) return false;
    }
    return true;
}

namespace {

double distance_at(const FourierTrajectory& traj, const SingularSet& s, double t) {
    return nearest_singular(s, traj.position(t)).distance;
}

// Golden-section refinement of a bracketed local minimum of the clearance.
double refine_minimum(const FourierTrajectory& traj, const SingularSet& s, double lo, double hi, double best) {
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = distance_at(traj, s, c), fd = distance_at(traj, s, d);
    for (int it = 0; it < 60 && (b - a) > 1e-14 * traj.omega; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = distance_at(traj, s, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = distance_at(traj, s, d);
        }
    }
    return std::min({best, fc, fd});
}

}  // namespace

HomotopySignature winding_signature(const FourierTrajectory& traj, const SingularSet& s, int nodes, int max_nodes) {
    traj.validate();
    HomotopySignature sig;
    if (s.empty()) return sig;

    int count = nodes > 0 ? nodes : 16 * traj.modes();
    count = std::max(count, 2 * traj.modes() + 1);
    const bool planar = traj.m == 2 && traj.n() == 0 && s.m() == 2 && s.n() == 0;

    SampledPath path;
    for (;;) {
        path = sample(traj, count);
        if (!planar) break;
        std::vector<Eigen::Vector2d> pts(count);
        for (int i = 0; i < count; ++i) pts[i] = path.z.row(i).transpose();
        double worst = 0.0;
        std::vector<std::pair<Eigen::Vector2d, int>> windings;
        for (const auto& p : s.points()) {
            double inc = 0.0;
            const double w = winding_of_polygon(pts, p, &inc);
            worst = std::max(worst, inc);
            windings.emplace_back(p, static_cast<int>(std::lround(w)));
        }
        if (worst < 0.5 * kPi) {
            sig.windings_defined = true;
            sig.windings = std::move(windings);
            break;
        }
        if (count * 2 > max_nodes)
            throw WindingError("winding refinement cap exceeded: trajectory passes too close to a singular point");
        count *= 2;
    }
    sig.nodes_used = count;

    // Clearance: node minimum, then golden-section refinement at every local minimum.
    std::vector<double> dist(count);
    int argmin = 0;
    for (int i = 0; i < count; ++i) {
        dist[i] = nearest_singular(s, path.z.row(i).transpose()).distance;
        if (dist[i] < dist[argmin]) argmin = i;
    }
    double best = dist[argmin];
    double best_t = path.t[argmin];
    const double h = traj.omega / count;
    for (int i = 0; i < count; ++i) {
        const double prev = dist[(i + count - 1) % count];
        const double next = dist[(i + 1) % count];
        if (dist[i] <= prev && dist[i] <= next) {
            const double t0 = path.t[i];
            const double refined = refine_minimum(traj, s, t0 - h, t0 + h, dist[i]);
            if (refined < best) {
                best = refined;
                best_t = t0;
            }
        }
    }
    sig.min_distance = best;
    sig.nearest_point = nearest_singular(s, traj.position(best_t)).witness;

    double integral = 0.0;
    for (int i = 0; i < count; ++i) integral += 1.0 / (path.z.row(i).transpose() - *sig.nearest_point).squaredNorm();
    sig.clearance_integral = integral * traj.omega / count;
    return sig;
}

// ---------------------------------------------------------------------------
// Seed curves

Eigen::Vector2d seed_curve_point(int coils, const Eigen::Vector2d& r0, double omega, double t) {
    double tau = std::fmod(t, omega);
    if (tau < 0.0) tau += omega;
    const Eigen::Vector2d p = Eigen::Vector2d(-r0.y(), r0.x()) / r0.norm();
    const double rho = 0.5 * r0.norm();
    auto half = [&](double s) {
        const double theta = kTwoPi * coils * (2.0 * s / omega);
        return Eigen::Vector2d(r0 - r0 * std::cos(theta) + rho * p * std::sin(theta));
    };
    if (tau <= 0.5 * omega) return half(tau);
    return -half(omega - tau);
}

FourierTrajectory seed_curve(int coils, const SingularSet& s, double omega, int modes, double guard) {
    if (coils < 1) throw TrajectoryError("seed curve needs a positive coil count");
    if (s.m() != 2 || s.n() != 0 || s.points().size() != 2)
        throw TrajectoryError("seed curve needs a planar singular set made of one symmetric pair");
    const Eigen::Vector2d r0 = s.points()[0];
    if (r0.norm() == 0.0) throw TrajectoryError("seed curve needs r0 != 0");
    if (guard < 0.0) guard = 0.05 * r0.norm();

    FourierTrajectory traj = FourierTrajectory::zero(omega, 2, {}, modes);
    // Discrete sine transform on a fine grid: b_k = (2/omega) int_0^omega z(t) sin(k w t) dt.
    const int grid = std::max(8192, 64 * modes);
    for (int i = 0; i < grid; ++i) {
        const double t = omega * i / grid;
        const Eigen::Vector2d z = seed_curve_point(coils, r0, omega, t);
        for (int k = 1; k <= modes; ++k) {
            const long r = (static_cast<long>(k) * i) % grid;
            const double sk = std::sin(kTwoPi * static_cast<double>(r) / grid);
            traj.coeffs.row(k - 1) += (2.0 / grid) * sk * z.transpose();
        }
    }

    HomotopySignature sig;
    try {
        sig = winding_signature(traj, s);
    } catch (const WindingError& e) {
        throw TrajectoryError(std::string("seed projection unusable: ") + e.what());
    }
    if (!(sig.min_distance > guard))
        throw TrajectoryError("seed projection at N=" + std::to_string(modes) + " comes within " +
                              std::to_string(sig.min_distance) + " of a singular point (guard " +
                              std::to_string(guard) + ")");
    auto w_r0 = sig.winding_about(r0);
    auto w_neg = sig.winding_about(-r0);
    if (!w_r0 || !w_neg || *w_r0 != -coils || *w_neg != coils)
        throw TrajectoryError("seed projection at N=" + std::to_string(modes) + " does not keep the target windings");
    return traj;
}

// ---------------------------------------------------------------------------
// Inequality check for u(0) = 0 on [0, a]

double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
    static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        double s = 0.0;
        for (int q = 0; q < 4; ++q) s += w[q] * (f(mid - 0.5 * h * x[q]) + f(mid + 0.5 * h * x[q]));
        sum += 0.5 * h * s;
    }
    return sum;
}

OddBoundResult odd_bound_check(const FourierTrajectory& traj, int component, double a) {
    if (component < 0 || component >= traj.dim()) throw TrajectoryError("component index out of range");
    if (!(a > 0.0)) throw TrajectoryError("interval length must be positive");
    auto u = [&](double t) { return traj.position(t)[component]; };
    auto ud = [&](double t) { return traj.velocity(t)[component]; };

    // Resolve the highest mode with ~16 panels per period on the interval.
    const double periods = a * traj.frequency(traj.modes()) / kTwoPi;
    const int panels = std::max(64, static_cast<int>(std::ceil(16.0 * periods)));

    OddBoundResult r;
    r.lhs_l2 = gauss_legendre([&](double t) { return u(t) * u(t); }, 0.0, a, panels);
    const double ud2 = gauss_legendre([&](double t) { return ud(t) * ud(t); }, 0.0, a, panels);
    r.rhs_l2 = 0.5 * a * a * ud2;
    r.rhs_c = a * ud2;

    // Sup norm: dense sampling, then golden-section refinement around the best sample.
    const int samples = 8 * panels;
    double best = 0.0, best_t = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double t = a * i / samples;
        const double v = u(t) * u(t);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    {
        const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double lo = std::max(0.0, best_t - a / samples), hi = std::min(a, best_t + a / samples);
        double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
        double fc = u(c) * u(c), fd = u(d) * u(d);
        for (int it = 0; it < 80; ++it) {
            if (fc > fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = u(c) * u(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = u(d) * u(d);
            }
        }
        best = std::max({best, fc, fd});
    }
    r.lhs_c = best;
    r.holds_l2 = r.lhs_l2 <= r.rhs_l2;
    r.holds_c = r.lhs_c <= r.rhs_c;
    return r;
}

}  // namespace lagvar
