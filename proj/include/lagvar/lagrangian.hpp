#pragma once

#include <Eigen/Dense>

#include <vector>

#include "lagvar/model.hpp"

namespace lagvar {

/// A model together with every symbolic derivative the action, its gradient and
/// the Euler-Lagrange residual need. Built once; evaluation is reentrant.
///
///   L = 1/2 g_ij zd^i zd^j + a_i zd^i - V
class Lagrangian {
public:
    using Vec = Eigen::VectorXd;
    using Mat = Eigen::MatrixXd;
    using ConstRef = Eigen::Ref<const Eigen::VectorXd>;

    explicit Lagrangian(ModelSpec model);

    const ModelSpec& model() const { return model_; }
    int dim() const { return dim_; }
    bool has_constraints() const { return !model_.constraints.empty(); }
    int constraint_count() const { return static_cast<int>(model_.constraints.size()); }

    double value(double t, const ConstRef& z, const ConstRef& zd) const;

    /// Returns L and fills dL/dz and dL/dzd.
    double partials(double t, const ConstRef& z, const ConstRef& zd, Vec& dl_dz, Vec& dl_dzd) const;

    /// R_k = d/dt (dL/dzd^k) - dL/dz^k along a path with acceleration zdd.
    Vec residual(double t, const ConstRef& z, const ConstRef& zd, const ConstRef& zdd) const;

    /// Jacobi integral h = zd . dL/dzd - L.
    double energy(double t, const ConstRef& z, const ConstRef& zd) const;

    Mat metric(double t, const ConstRef& z) const;
    Vec gyro(double t, const ConstRef& z) const;
    double potential(double t, const ConstRef& z) const;

    Vec constraint_values(double t, const ConstRef& z) const;
    /// l x (m+n) matrix of df_j/dz^k.
    Mat constraint_jacobian(double t, const ConstRef& z) const;
    /// df_j/dt at fixed z.
    Vec constraint_time_derivative(double t, const ConstRef& z) const;

private:
    ModelSpec model_;
    int dim_;

    std::vector<Expr> g_;        // dim*dim, row-major
    std::vector<Expr> dg_;       // [k][i][j] = d_k g_ij
    std::vector<Expr> dg_dt_;    // [i][j]
    std::vector<Expr> a_;        // [i]
    std::vector<Expr> da_;       // [k][i] = d_k a_i
    std::vector<Expr> da_dt_;    // [i]
    Expr v_;
    std::vector<Expr> dv_;       // [k]
    std::vector<Expr> f_;        // [j]
    std::vector<Expr> df_;       // [j][k]
    std::vector<Expr> df_dt_;    // [j]

    std::vector<bool> g_zero_deriv_;   // per k: every d_k g_ij is zero
    std::vector<bool> a_zero_deriv_;   // per k
    bool gyro_zero_ = true;
    bool metric_time_free_ = true;
    bool gyro_time_free_ = true;
};

}  // namespace lagvar
