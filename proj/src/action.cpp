#include "lagvar/action.hpp"

#include <cmath>

namespace lagvar {

ActionEvaluator::ActionEvaluator(const Lagrangian& lagrangian, double omega, int modes, int nodes)
    : lag_(lagrangian), basis_(omega, modes, nodes), sigma_(lagrangian.model().singular_set()) {}

ActionEvaluator::Result ActionEvaluator::evaluate(const FourierTrajectory& traj, double mu, bool with_gradient) const {
    const int nodes = basis_.nodes();
    const int dim = lag_.dim();
    const double weight = basis_.omega() / nodes;
    const SampledPath path = basis_.sample(traj, false);
    const bool penalize = mu > 0.0 && lag_.has_constraints();

    Result r;
    Eigen::MatrixXd dl_dz(nodes, dim), dl_dzd(nodes, dim);
    Eigen::MatrixXd pen(nodes, dim);
    if (penalize) pen.setZero();
    Eigen::VectorXd gz, gzd;
    double sum_l = 0.0;
    double sum_f = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double t = path.t[i];
        const Eigen::VectorXd z = path.z.row(i).transpose();
        const Eigen::VectorXd zd = path.zd.row(i).transpose();
        if (!sigma_.empty()) {
            const double d = nearest_singular(sigma_, z).distance;
            r.min_node_distance = std::min(r.min_node_distance, d);
            if (d < kMachineGuard)
                throw SingularityError("quadrature node t=" + std::to_string(t) + " hits a singular point");
        }
        if (with_gradient) {
            sum_l += lag_.partials(t, z, zd, gz, gzd);
            dl_dz.row(i) = gz.transpose();
            dl_dzd.row(i) = gzd.transpose();
        } else {
            sum_l += lag_.value(t, z, zd);
        }
        if (lag_.has_constraints()) {
            const Eigen::VectorXd f = lag_.constraint_values(t, z);
            sum_f += f.squaredNorm();
            if (penalize && with_gradient) pen.row(i) = (lag_.constraint_jacobian(t, z).transpose() * f).transpose();
        }
    }
    r.action = weight * sum_l;
    r.constraint_sq = weight * sum_f;
    r.objective = r.action + (penalize ? 0.5 * mu * r.constraint_sq : 0.0);
    if (with_gradient) {
        if (penalize) dl_dz += mu * pen;
        r.gradient = weight * (basis_.sin_table().transpose() * dl_dz +
                               basis_.frequencies().asDiagonal() * (basis_.cos_table().transpose() * dl_dzd));
    }
    return r;
}

double action(const ModelSpec& model, const FourierTrajectory& traj, int nodes) {
    const Lagrangian lag(model);
    return ActionEvaluator(lag, traj.omega, traj.modes(), nodes).evaluate(traj, 0.0, false).action;
}

Eigen::MatrixXd action_gradient(const ModelSpec& model, const FourierTrajectory& traj, int nodes) {
    const Lagrangian lag(model);
    return ActionEvaluator(lag, traj.omega, traj.modes(), nodes).evaluate(traj).gradient;
}

double coercivity_margin(const GrowthConstants& k, double omega) {
    return k.K - k.M * omega / std::sqrt(2.0) - k.A * omega * omega / 2.0;
}

double action_lower_bound(const GrowthConstants& k, double omega, double h1) {
    return coercivity_margin(k, omega) * h1 * h1 - k.C * std::sqrt(omega) * h1;
}

double apriori_radius(const GrowthConstants& k, double omega, double s_ref) {
    const double margin = coercivity_margin(k, omega);
    if (!(margin > 0.0)) throw std::domain_error("a priori radius unavailable: coercivity margin is not positive");
    const double b = k.C * std::sqrt(omega);
    const double c = s_ref + k.C1 * omega;
    const double disc = b * b + 4.0 * margin * c;
    if (disc < 0.0) return 0.0;
    return (b + std::sqrt(disc)) / (2.0 * margin);
}

ActionReport make_action_report(const ModelSpec& model, const FourierTrajectory& traj, int nodes) {
    const Lagrangian lag(model);
    const ActionEvaluator evaluator(lag, traj.omega, traj.modes(), nodes);
    const auto r = evaluator.evaluate(traj);
    ActionReport report;
    report.S = r.action;
    report.grad_norm = r.gradient.norm();
    report.h1 = h1_seminorm(traj);
    report.min_distance = winding_signature(traj, model.singular_set(), nodes).min_distance;
    report.margin = coercivity_margin(model.constants, model.omega);
    report.lower_bound_at_h1 = action_lower_bound(model.constants, model.omega, report.h1);
    return report;
}

}  // namespace lagvar
