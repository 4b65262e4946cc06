#include "lagvar/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace lagvar {

void SolveOptions::validate() const {
    if (modes < 1) throw OptionsError("modes must be positive");
    if (nodes < 2 * modes + 1) throw OptionsError("nodes must be at least 2*modes+1");
    if (max_iters < 1) throw OptionsError("max_iters must be positive");
    if (memory < 1) throw OptionsError("memory must be positive");
    const std::pair<const char*, double> positive[] = {
        {"grad_tol", grad_tol},         {"step_tol", step_tol},       {"guard_delta", guard_delta},
        {"penalty_mu0", penalty_mu0},   {"penalty_max", penalty_max}, {"diverge_factor", diverge_factor},
    };
    for (const auto& [key, v] : positive)
        if (!(v > 0.0) || !std::isfinite(v)) throw OptionsError(std::string(key) + " must be positive");
    if (!(penalty_growth > 1.0)) throw OptionsError("penalty_growth must exceed 1");
    if (penalty_max < penalty_mu0) throw OptionsError("penalty_max must be at least penalty_mu0");
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::Diverged: return "Diverged";
        case SolveStatus::GuardTriggered: return "GuardTriggered";
        case SolveStatus::SignatureChanged: return "SignatureChanged";
        case SolveStatus::MaxIter: return "MaxIter";
    }
    return "?";
}

namespace {

using Vec = Eigen::VectorXd;

constexpr double kRoundingBand = 1e-13;

struct Pair {
    Vec s, y;
    double rho;
};

// Two-loop recursion; returns -H g.
Vec lbfgs_direction(const std::deque<Pair>& mem, const Vec& g) {
    Vec q = g;
    std::vector<double> alpha(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
        alpha[i] = mem[i].rho * mem[i].s.dot(q);
        q -= alpha[i] * mem[i].y;
    }
    if (!mem.empty()) {
        const auto& last = mem.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const double beta = mem[i].rho * mem[i].y.dot(q);
        q += (alpha[i] - beta) * mem[i].s;
    }
    return -q;
}

enum class Rejection { None, Guard, Signature, Domain, Decrease };

class Problem {
public:
    Problem(const ModelSpec& model, const FourierTrajectory& shape, const SolveOptions& opts)
        : lag_(model), eval_(lag_, shape.omega, opts.modes, opts.nodes), shape_(shape),
          sigma_(model.singular_set()), opts_(opts) {
        // Diagonal scaling from the kinetic part of the Hessian: (omega/2) (2 pi k/omega)^2 g_dd.
        const int n_modes = opts.modes, dim = shape.dim();
        const SampledPath p = eval_.basis().sample(shape, false);
        Vec gbar = Vec::Zero(dim);
        for (int i = 0; i < p.nodes(); ++i) {
            const Eigen::MatrixXd g = lag_.metric(p.t[i], p.z.row(i).transpose());
            gbar += g.diagonal();
        }
        gbar /= p.nodes();
        scale_.resize(n_modes * dim);
        for (int k = 0; k < n_modes; ++k) {
            const double w = eval_.basis().frequencies()[k];
            for (int d = 0; d < dim; ++d) {
                const double g = gbar[d] > 0.0 && std::isfinite(gbar[d]) ? gbar[d] : 1.0;
                scale_[k * dim + d] = std::sqrt(0.5 * shape.omega * w * w * g);
            }
        }
    }

    const Lagrangian& lagrangian() const { return lag_; }

    // Size of the rounding error in the penalty gradient mu (omega/M) sum f df/db:
    // f carries an error of about eps |J| |z| at each node.
    double penalty_noise_floor(const FourierTrajectory& traj, double mu) const {
        if (mu == 0.0 || !lag_.has_constraints()) return 0.0;
        const SampledPath p = eval_.basis().sample(traj, false);
        double jmax = 0.0, zmax = 0.0;
        for (int i = 0; i < p.nodes(); ++i) {
            const Eigen::VectorXd z = p.z.row(i).transpose();
            jmax = std::max(jmax, lag_.constraint_jacobian(p.t[i], z).norm());
            zmax = std::max(zmax, z.cwiseAbs().maxCoeff());
        }
        return mu * traj.omega * std::numeric_limits<double>::epsilon() * jmax * jmax * zmax;
    }
    const SingularSet& sigma() const { return sigma_; }
    const ActionEvaluator& evaluator() const { return eval_; }

    FourierTrajectory to_trajectory(const Vec& u) const {
        FourierTrajectory t = shape_;
        const int dim = shape_.dim();
        for (int k = 0; k < opts_.modes; ++k)
            for (int d = 0; d < dim; ++d) t.coeffs(k, d) = u[k * dim + d] / scale_[k * dim + d];
        return t;
    }

    Vec to_variables(const FourierTrajectory& t) const {
        const int dim = shape_.dim();
        Vec u(opts_.modes * dim);
        for (int k = 0; k < opts_.modes; ++k)
            for (int d = 0; d < dim; ++d) u[k * dim + d] = t.coeffs(k, d) * scale_[k * dim + d];
        return u;
    }

    // Gradient in scaled variables; `raw_norm` receives ||dS_mu/db||.
    Vec scaled_gradient(const Eigen::MatrixXd& g, double& raw_norm) const {
        const int dim = shape_.dim();
        Vec out(opts_.modes * dim);
        for (int k = 0; k < opts_.modes; ++k)
            for (int d = 0; d < dim; ++d) out[k * dim + d] = g(k, d) / scale_[k * dim + d];
        raw_norm = g.norm();
        return out;
    }

private:
    Lagrangian lag_;
    ActionEvaluator eval_;
    FourierTrajectory shape_;
    SingularSet sigma_;
    SolveOptions opts_;
    Vec scale_;
};

struct Point {
    Vec u;
    FourierTrajectory traj;
    ActionEvaluator::Result eval;
    Vec grad;  // scaled
    double grad_norm = 0.0;
    HomotopySignature signature;
};

}  // namespace

SolveResult minimize(const ModelSpec& model, const FourierTrajectory& seed, const SolveOptions& opts,
                     const IterationCallback& on_iteration) {
    opts.validate();
    seed.validate();
    if (seed.dim() != model.dim() || seed.m != model.m) throw OptionsError("seed shape does not match the model");
    if (seed.nu != model.nu) throw OptionsError("seed winding vector differs from the model's nu");
    if (std::abs(seed.omega - model.omega) > 1e-12 * model.omega) throw OptionsError("seed period differs from the model's omega");

    FourierTrajectory start = seed.with_modes(opts.modes);
    start.omega = model.omega;
    const Problem problem(model, start, opts);
    const SingularSet& sigma = problem.sigma();
    const bool guarded = !sigma.empty();

    SolveResult result;
    result.trajectory = start;

    auto signature_of = [&](const FourierTrajectory& t) {
        return guarded ? winding_signature(t, sigma, opts.nodes) : HomotopySignature{};
    };

    Point x;
    x.u = problem.to_variables(start);
    x.traj = start;
    try {
        x.signature = signature_of(start);
    } catch (const WindingError& e) {
        result.status = SolveStatus::GuardTriggered;
        result.message = std::string("seed winding undefined: ") + e.what();
        return result;
    }
    result.seed_signature = x.signature;
    if (guarded && !(x.signature.min_distance > opts.guard_delta)) {
        result.status = SolveStatus::GuardTriggered;
        result.signature = x.signature;
        result.message = "seed violates the guard distance";
        try {
            result.report = make_action_report(model, start, opts.nodes);
        } catch (const SingularityError&) {
            result.report.min_distance = x.signature.min_distance;
        }
        return result;
    }

    const GrowthConstants& k = model.constants;
    const double margin = coercivity_margin(k, model.omega);
    result.seed_action = problem.evaluator().evaluate(start, 0.0, false).action;
    const double seed_norm = h1_seminorm(start);
    const double diverge_at = margin > 0.0 ? opts.diverge_factor * apriori_radius(k, model.omega, result.seed_action)
                                           : opts.diverge_factor * std::max(seed_norm, 1.0);

    std::vector<double> schedule;
    if (problem.lagrangian().has_constraints()) {
        for (double mu = opts.penalty_mu0; mu < opts.penalty_max; mu *= opts.penalty_growth) schedule.push_back(mu);
        schedule.push_back(opts.penalty_max);
    } else {
        schedule.push_back(0.0);
    }

    auto evaluate_at = [&](Point& p, double mu) {
        p.eval = problem.evaluator().evaluate(p.traj, mu, true);
        p.grad = problem.scaled_gradient(p.eval.gradient, p.grad_norm);
    };

    evaluate_at(x, schedule.front());
    int iter = 0;
    bool done = false;
    SolveStatus status = SolveStatus::MaxIter;

    for (std::size_t phase = 0; phase < schedule.size() && !done; ++phase) {
        const double mu = schedule[phase];
        const bool last_phase = phase + 1 == schedule.size();
        const double tol = last_phase ? opts.grad_tol : std::max(opts.grad_tol, 1e-6);
        if (phase > 0) evaluate_at(x, mu);
        std::deque<Pair> memory;
        bool phase_converged = false;

        while (!done) {
            if (x.grad_norm <= tol ||
                (x.grad_norm <= std::max(tol, problem.penalty_noise_floor(x.traj, mu)))) {
                phase_converged = true;
                break;
            }
            if (iter >= opts.max_iters) {
                status = SolveStatus::MaxIter;
                result.message = "iteration limit reached";
                done = true;
                break;
            }
            Vec p = lbfgs_direction(memory, x.grad);
            double slope = x.grad.dot(p);
            if (!(slope < 0.0)) {
                memory.clear();
                p = -x.grad;
                slope = x.grad.dot(p);
            }

            double alpha = 1.0;
            Rejection last = Rejection::None;
            std::string domain_message;
            Point cand;
            bool accepted = false;
            const double x_norm = x.u.norm();
            while (alpha * p.norm() >= opts.step_tol * (1.0 + x_norm)) {
                cand.u = x.u + alpha * p;
                cand.traj = problem.to_trajectory(cand.u);
                last = Rejection::None;
                if (guarded) {
                    try {
                        cand.signature = winding_signature(cand.traj, sigma, opts.nodes);
                    } catch (const WindingError&) {
                        last = Rejection::Signature;
                    }
                    if (last == Rejection::None) {
                        if (!(cand.signature.min_distance > opts.guard_delta))
                            last = Rejection::Guard;
                        else if (!cand.signature.same_windings(result.seed_signature))
                            last = Rejection::Signature;
                    }
                }
                if (last == Rejection::None) {
                    try {
                        evaluate_at(cand, mu);
                    } catch (const SingularityError&) {
                        last = Rejection::Guard;
                    } catch (const DomainError& e) {
                        last = Rejection::Domain;
                        domain_message = e.what();
                    }
                }
                if (last == Rejection::None) {
                    const double f0 = x.eval.objective, f1 = cand.eval.objective;
                    const bool armijo = f1 <= f0 + 1e-4 * alpha * slope;
                    // Near the minimum the decrease drops below rounding of S. Inside the
                    // rounding band, fall back to the approximate Wolfe test on the
                    // directional derivative: phi'(alpha) <= (2 delta - 1) phi'(0).
                    const bool flat = f1 <= f0 + kRoundingBand * std::abs(f0) && cand.grad.dot(p) <= -0.8 * slope;
                    if (armijo || flat) {
                        accepted = true;
                        break;
                    }
                    last = Rejection::Decrease;
                }
                alpha *= 0.5;
            }

            if (!accepted) {
                if (!memory.empty()) {
                    memory.clear();
                    continue;
                }
                done = true;
                switch (last) {
                    case Rejection::Guard:
                        status = SolveStatus::GuardTriggered;
                        result.message = "no step keeps the guard distance to sigma";
                        break;
                    case Rejection::Signature:
                        status = SolveStatus::SignatureChanged;
                        result.message = "every descent step changes the winding signature";
                        break;
                    case Rejection::Domain:
                        throw DomainError("iteration " + std::to_string(iter) + ": " + domain_message, "line search");
                    default:
                        status = SolveStatus::MaxIter;
                        result.message = "line search stalled before reaching the gradient tolerance";
                        break;
                }
                break;
            }

            Vec s = cand.u - x.u;
            Vec y = cand.grad - x.grad;
            const double sy = s.dot(y);
            if (sy > 1e-12 * s.norm() * y.norm()) {
                memory.push_back({std::move(s), std::move(y), 1.0 / sy});
                if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
            }
            x = std::move(cand);
            ++iter;

            IterationRecord rec;
            rec.iteration = iter;
            rec.phase = static_cast<int>(phase);
            rec.mu = mu;
            rec.objective = x.eval.objective;
            rec.action = x.eval.action;
            rec.grad_norm = x.grad_norm;
            rec.min_distance = guarded ? x.signature.min_distance : std::numeric_limits<double>::infinity();
            rec.constraint_sq = x.eval.constraint_sq;
            rec.step = alpha;
            result.history.push_back(rec);
            if (on_iteration) on_iteration(rec);

            if (h1_seminorm(x.traj) > diverge_at) {
                status = SolveStatus::Diverged;
                result.message = "trajectory norm exceeded " + std::to_string(diverge_at);
                done = true;
            }
        }
        if (!done && last_phase && phase_converged) {
            status = SolveStatus::Converged;
            done = true;
        }
        result.final_mu = mu;
    }

    result.status = status;
    result.iterations = iter;
    result.trajectory = x.traj;
    result.signature = guarded ? signature_of(x.traj) : HomotopySignature{};
    result.constraint_sq = x.eval.constraint_sq;
    result.report.S = x.eval.action;
    result.report.grad_norm = x.grad_norm;
    result.report.h1 = h1_seminorm(x.traj);
    result.report.min_distance = result.signature.min_distance;
    result.report.margin = margin;
    result.report.lower_bound_at_h1 = action_lower_bound(k, model.omega, result.report.h1);
    if (status != SolveStatus::SignatureChanged && guarded && !result.signature.same_windings(result.seed_signature))
        throw std::logic_error("accepted iterate left the seed's winding signature");
    return result;
}

SolveResult solve_in_class(const ModelSpec& model, const ClassSpec& cls, const SolveOptions& opts,
                           const IterationCallback& on_iteration) {
    FourierTrajectory seed;
    if (cls.seed) {
        seed = *cls.seed;
    } else if (cls.coils) {
        seed = seed_curve(*cls.coils, model.singular_set(), model.omega, opts.modes);
    } else {
        seed = FourierTrajectory::zero_for(model, opts.modes);
    }
    SolveResult r = minimize(model, seed, opts, on_iteration);
    if (r.status != SolveStatus::SignatureChanged && !r.signature.same_windings(r.seed_signature))
        throw std::logic_error("solution left the seed's homotopy signature");
    return r;
}

}  // namespace lagvar
