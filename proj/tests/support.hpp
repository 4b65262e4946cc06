#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>

#include "lagvar/expr.hpp"
#include "lagvar/model_io.hpp"
#include "lagvar/trajectory.hpp"

namespace support {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline std::string model_path(const std::string& file) { return std::string(LAGVAR_MODELS_DIR) + "/" + file; }

inline lagvar::ModelSpec load(const std::string& file) { return lagvar::load_model_file(model_path(file)); }

inline double eval_at(const lagvar::Expr& e, double t, const Eigen::VectorXd& z) {
    return lagvar::eval(e, t, {z.data(), static_cast<std::size_t>(z.size())});
}

/// Random sine coefficients with amplitude decaying like 1/k^2.
inline lagvar::FourierTrajectory random_trajectory(std::mt19937_64& rng, double omega, int m, std::vector<int> nu,
                                                   int modes, double amplitude) {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto traj = lagvar::FourierTrajectory::zero(omega, m, std::move(nu), modes);
    for (int k = 0; k < modes; ++k)
        for (int d = 0; d < traj.dim(); ++d) traj.coeffs(k, d) = amplitude * normal(rng) / ((k + 1.0) * (k + 1.0));
    return traj;
}

inline lagvar::FourierTrajectory random_for(std::mt19937_64& rng, const lagvar::ModelSpec& model, int modes,
                                            double amplitude) {
    return random_trajectory(rng, model.omega, model.m, model.nu, modes, amplitude);
}

}  // namespace support
