#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagvar/action.hpp"
#include "lagvar/trajectory.hpp"

namespace lagvar {

class OptionsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SolveOptions {
    int modes = 32;          // N
    int nodes = 256;         // M
    int max_iters = 5000;
    double grad_tol = 1e-9;  // on ||dS_mu/db||
    double step_tol = 1e-14;
    double guard_delta = 1e-3;
    double penalty_mu0 = 10.0;
    double penalty_growth = 10.0;
    double penalty_max = 1e8;
    double diverge_factor = 10.0;
    int memory = 10;

    void validate() const;
};

enum class SolveStatus { Converged, Diverged, GuardTriggered, SignatureChanged, MaxIter };

std::string to_string(SolveStatus s);

struct IterationRecord {
    int iteration = 0;
    int phase = 0;
    double mu = 0.0;
    double objective = 0.0;  // S_mu
    double action = 0.0;     // S
    double grad_norm = 0.0;
    double min_distance = 0.0;
    double constraint_sq = 0.0;
    double step = 0.0;
};

struct SolveResult {
    FourierTrajectory trajectory;
    SolveStatus status = SolveStatus::MaxIter;
    ActionReport report;
    HomotopySignature signature;
    HomotopySignature seed_signature;
    std::vector<IterationRecord> history;
    int iterations = 0;
    double final_mu = 0.0;
    double constraint_sq = 0.0;  // (omega/M) sum_i |f(t_i, z_i)|^2 at the result
    double seed_action = 0.0;
    std::string message;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Minimizes the discrete action over sine coefficients, starting at `seed`, while
/// keeping every accepted iterate at least guard_delta away from sigma and in the
/// seed's winding signature.
SolveResult minimize(const ModelSpec& model, const FourierTrajectory& seed, const SolveOptions& opts,
                     const IterationCallback& on_iteration = {});

/// Target class: a coil count for the planar two-center family, or an explicit
/// seed. With neither, the drift-only trajectory of the model's nu is used.
struct ClassSpec {
    std::optional<int> coils;
    std::optional<FourierTrajectory> seed;
};

SolveResult solve_in_class(const ModelSpec& model, const ClassSpec& cls, const SolveOptions& opts,
                           const IterationCallback& on_iteration = {});

}  // namespace lagvar
