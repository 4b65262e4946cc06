#include "lagvar/lagrangian.hpp"

namespace lagvar {

namespace {

double ev(const Expr& e, double t, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (e.is_constant()) return e.node().value;
    return eval(e, t, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

bool all_zero(const std::vector<Expr>& v, std::size_t begin, std::size_t count) {
    for (std::size_t i = begin; i < begin + count; ++i)
        if (!v[i].is_constant(0.0)) return false;
    return true;
}

}  // namespace

Lagrangian::Lagrangian(ModelSpec model) : model_(std::move(model)), dim_(model_.dim()) {
    const int d = dim_;
    const Var t = Var::time();
    g_.reserve(d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g_.push_back(model_.metric[i][j]);
    for (int k = 0; k < d; ++k)
        for (int ij = 0; ij < d * d; ++ij) dg_.push_back(differentiate(g_[ij], Var::coord(k + 1)));
    for (int ij = 0; ij < d * d; ++ij) dg_dt_.push_back(differentiate(g_[ij], t));

    a_ = model_.gyro;
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i) da_.push_back(differentiate(a_[i], Var::coord(k + 1)));
    for (int i = 0; i < d; ++i) da_dt_.push_back(differentiate(a_[i], t));

    v_ = model_.potential;
    for (int k = 0; k < d; ++k) dv_.push_back(differentiate(v_, Var::coord(k + 1)));

    for (const auto& c : model_.constraints) {
        f_.push_back(c.f);
        for (int k = 0; k < d; ++k) df_.push_back(differentiate(c.f, Var::coord(k + 1)));
        df_dt_.push_back(differentiate(c.f, t));
    }

    for (int k = 0; k < d; ++k) {
        g_zero_deriv_.push_back(all_zero(dg_, static_cast<std::size_t>(k) * d * d, d * d));
        a_zero_deriv_.push_back(all_zero(da_, static_cast<std::size_t>(k) * d, d));
    }
    gyro_zero_ = all_zero(a_, 0, d);
    metric_time_free_ = all_zero(dg_dt_, 0, d * d);
    gyro_time_free_ = all_zero(da_dt_, 0, d);
}

Lagrangian::Mat Lagrangian::metric(double t, const ConstRef& z) const {
    Mat g(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) g(i, j) = ev(g_[i * dim_ + j], t, z);
    return g;
}

Lagrangian::Vec Lagrangian::gyro(double t, const ConstRef& z) const {
    Vec a = Vec::Zero(dim_);
    if (gyro_zero_) return a;
    for (int i = 0; i < dim_; ++i) a[i] = ev(a_[i], t, z);
    return a;
}

double Lagrangian::potential(double t, const ConstRef& z) const { return ev(v_, t, z); }

double Lagrangian::value(double t, const ConstRef& z, const ConstRef& zd) const {
    const Mat g = metric(t, z);
    const Vec a = gyro(t, z);
    return 0.5 * zd.dot(g * zd) + a.dot(zd) - potential(t, z);
}

double Lagrangian::partials(double t, const ConstRef& z, const ConstRef& zd, Vec& dl_dz, Vec& dl_dzd) const {
    const int d = dim_;
    const Mat g = metric(t, z);
    const Vec a = gyro(t, z);
    const Vec gzd = g * zd;
    dl_dzd = gzd + a;
    dl_dz.resize(d);
    for (int k = 0; k < d; ++k) {
        double s = -ev(dv_[k], t, z);
        if (!g_zero_deriv_[k]) {
            double q = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const Expr& e = dg_[(k * d + i) * d + j];
                    if (!e.is_constant(0.0)) q += ev(e, t, z) * zd[i] * zd[j];
                }
            s += 0.5 * q;
        }
        if (!a_zero_deriv_[k]) {
            for (int i = 0; i < d; ++i) s += ev(da_[k * d + i], t, z) * zd[i];
        }
        dl_dz[k] = s;
    }
    return 0.5 * zd.dot(gzd) + a.dot(zd) - potential(t, z);
}

Lagrangian::Vec Lagrangian::residual(double t, const ConstRef& z, const ConstRef& zd, const ConstRef& zdd) const {
    const int d = dim_;
    Vec dl_dz, dl_dzd;
    partials(t, z, zd, dl_dz, dl_dzd);

    // d/dt (g_kj zd^j + a_k) = g_kj zdd^j + d_l g_kj zd^l zd^j + d_t g_kj zd^j + d_l a_k zd^l + d_t a_k
    Vec r = metric(t, z) * zdd;
    for (int l = 0; l < d; ++l) {
        if (!g_zero_deriv_[l]) {
            for (int k = 0; k < d; ++k) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += ev(dg_[(l * d + k) * d + j], t, z) * zd[j];
                r[k] += s * zd[l];
            }
        }
        if (!a_zero_deriv_[l]) {
            for (int k = 0; k < d; ++k) r[k] += ev(da_[l * d + k], t, z) * zd[l];
        }
    }
    if (!metric_time_free_) {
        for (int k = 0; k < d; ++k)
            for (int j = 0; j < d; ++j) r[k] += ev(dg_dt_[k * d + j], t, z) * zd[j];
    }
    if (!gyro_time_free_) {
        for (int k = 0; k < d; ++k) r[k] += ev(da_dt_[k], t, z);
    }
    return r - dl_dz;
}

double Lagrangian::energy(double t, const ConstRef& z, const ConstRef& zd) const {
    const Mat g = metric(t, z);
    const Vec a = gyro(t, z);
    const Vec p = g * zd + a;
    const double l = 0.5 * zd.dot(g * zd) + a.dot(zd) - potential(t, z);
    return zd.dot(p) - l;
}

Lagrangian::Vec Lagrangian::constraint_values(double t, const ConstRef& z) const {
    Vec f(constraint_count());
    for (int j = 0; j < constraint_count(); ++j) f[j] = ev(f_[j], t, z);
    return f;
}

Lagrangian::Mat Lagrangian::constraint_jacobian(double t, const ConstRef& z) const {
    Mat jac(constraint_count(), dim_);
    for (int j = 0; j < constraint_count(); ++j)
        for (int k = 0; k < dim_; ++k) jac(j, k) = ev(df_[j * dim_ + k], t, z);
    return jac;
}

Lagrangian::Vec Lagrangian::constraint_time_derivative(double t, const ConstRef& z) const {
    Vec f(constraint_count());
    for (int j = 0; j < constraint_count(); ++j) f[j] = ev(df_dt_[j], t, z);
    return f;
}

}  // namespace lagvar
