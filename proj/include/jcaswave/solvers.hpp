#pragma once

#include "jcaswave/metrics.hpp"
#include "jcaswave/problem.hpp"

#include <optional>
#include <vector>

namespace jcaswave {

struct PgdConfig {
    /// Step size delta; unset means the inverse-Lipschitz default
    /// 0.1 * N / (P_T * lambda_max(Hbar^T Hbar)), computed per problem.
    std::optional<double> step_size;
    int max_iters = 500;
    double tol = 1e-8;  // best-so-far improvement threshold over a 20-iteration window
    bool project_every_iter = true;
    int starts = 1;  // multi-start count; starts > 1 draw random-phase initial points
};

struct PhaseGridConfig {
    int grid_points = 720;  // phases per entry, uniform on [0, 2pi)
    int max_antennas = 3;   // safety cap: cost is grid_points^N
};

struct PgdResult {
    RVec xbar;                  // best-so-far feasible iterate
    double objective = 0.0;     // objective at xbar
    std::vector<double> trace;  // objective of the feasible iterate, per iteration
    std::uint64_t total_iters = 0;  // summed across multi-starts
};

struct PhaseGridResult {
    RVec xbar;
    double objective = 0.0;
};

/// Projected gradient descent on one column problem. x_init must collapse to
/// unit-modulus entries or be the zero vector (which is projected first).
PgdResult pgd_solve(const RealColumnProblem& p, const PgdConfig& cfg, const RVec& x_init);

/// Runs cfg.starts PGD descents (first from x_init, the rest from random
/// phases drawn from rng) and keeps the best final objective.
PgdResult pgd_solve_multistart(const RealColumnProblem& p, const PgdConfig& cfg,
                               const RVec& x_init, Rng& rng);

/// Exhaustive enumeration over a uniform per-entry phase grid. Global grid
/// minimizer with lexicographic tie-break; cost grid_points^N.
PhaseGridResult phase_grid_solve(const RealColumnProblem& p, const PhaseGridConfig& cfg);

/// Default PGD step size for a problem (inverse-Lipschitz scaled).
double pgd_default_step(const RealColumnProblem& p);

enum class FrameSolver { Pgd, PhaseGrid };

/// Everything needed to turn a designed waveform into an EvalReport.
struct EvalContext {
    double n0 = 0.1;                 // noise power, watts
    std::vector<double> angle_grid;  // radians
    double delta = 0.5;
    BeamPattern reference;           // benchmark X0 pattern on angle_grid
};

EvalContext make_eval_context(const JcasProblem& p, double n0, const std::vector<double>& grid,
                              double delta);

struct FrameSolveConfig {
    FrameSolver solver = FrameSolver::Pgd;
    PgdConfig pgd;
    PhaseGridConfig phase_grid;
    std::uint64_t seed = 0;  // seeds the multi-start initializations
};

std::pair<Waveform, EvalReport> solve_frame(const JcasProblem& p, const FrameSolveConfig& cfg,
                                            const EvalContext& ctx);

/// Documented FLOP model for one PGD iteration (gradient, step, projection,
/// objective bookkeeping).
std::uint64_t pgd_flops_per_iter(Eigen::Index n, Eigen::Index k);

}  // namespace jcaswave
