#include "jcaswave/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <numbers>

namespace jcaswave {

namespace {

bool is_zero_vector(const RVec& v) { return v.cwiseAbs().maxCoeff() == 0.0; }

void require_unit_modulus_init(const RVec& x) {
    const CVec c = collapse_complex(x);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (std::abs(std::abs(c(i)) - 1.0) > 1e-9) {
            throw ConstraintError("pgd_solve: x_init must collapse to unit-modulus entries or be zero");
        }
    }
}

RVec random_phase_init(Eigen::Index n, Rng& rng) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    RVec x(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ph = phase(rng);
        x(i) = std::cos(ph);
        x(i + n) = std::sin(ph);
    }
    return x;
}

}  // namespace

double pgd_default_step(const RealColumnProblem& p) {
    Eigen::SelfAdjointEigenSolver<RMat> es(p.hbar_t_hbar(), Eigen::EigenvaluesOnly);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-12);
    return 0.1 * static_cast<double>(p.n()) / (p.p_t() * lmax);
}

PgdResult pgd_solve(const RealColumnProblem& p, const PgdConfig& cfg, const RVec& x_init) {
    if (cfg.max_iters < 1 || cfg.tol < 0.0) {
        throw ParameterError("pgd_solve: max_iters must be >= 1 and tol >= 0");
    }
    if (cfg.step_size && *cfg.step_size <= 0.0) {
        throw ParameterError("pgd_solve: step_size must be positive");
    }
    if (x_init.size() != 2 * p.n()) {
        throw DimensionError("pgd_solve: x_init has wrong length");
    }
    const double delta = cfg.step_size ? *cfg.step_size : pgd_default_step(p);

    RVec x = is_zero_vector(x_init) ? project_cm(x_init) : x_init;
    if (!is_zero_vector(x_init)) {
        require_unit_modulus_init(x_init);
    }

    // Projection can break monotone descent on this nonconvex set, so the
    // best-so-far feasible iterate is tracked and returned.
    RVec best = x;
    double best_obj = objective(p, best);
    constexpr int kWindow = 20;
    std::vector<double> best_history;
    best_history.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
    best_history.push_back(best_obj);

    PgdResult result;
    result.trace.reserve(static_cast<std::size_t>(cfg.max_iters));
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        x = (x - delta * gradient(p, x)).eval();
        if (cfg.project_every_iter) {
            x = project_cm(x);
        }
        const RVec feasible = cfg.project_every_iter ? x : project_cm(x);
        const double obj = objective(p, feasible);
        result.trace.push_back(obj);
        if (obj < best_obj) {
            best_obj = obj;
            best = feasible;
        }
        best_history.push_back(best_obj);
        const std::size_t t = best_history.size() - 1;
        if (t >= static_cast<std::size_t>(kWindow) &&
            best_history[t - kWindow] - best_history[t] < cfg.tol) {
            break;
        }
    }
    result.xbar = std::move(best);
    result.objective = best_obj;
    result.total_iters = result.trace.size();
    return result;
}

PgdResult pgd_solve_multistart(const RealColumnProblem& p, const PgdConfig& cfg, const RVec& x_init,
                               Rng& rng) {
    if (cfg.starts < 1) {
        throw ParameterError("pgd_solve_multistart: starts must be >= 1");
    }
    PgdResult best = pgd_solve(p, cfg, x_init);
    std::uint64_t iters = best.total_iters;
    for (int s = 1; s < cfg.starts; ++s) {
        PgdResult r = pgd_solve(p, cfg, random_phase_init(p.n(), rng));
        iters += r.total_iters;
        if (r.objective < best.objective) {
            best = std::move(r);
        }
    }
    best.total_iters = iters;
    return best;
}

PhaseGridResult phase_grid_solve(const RealColumnProblem& p, const PhaseGridConfig& cfg) {
    if (cfg.grid_points < 2) {
        throw ParameterError("phase_grid_solve: grid_points must be >= 2");
    }
    const Eigen::Index n = p.n();
    if (n > cfg.max_antennas) {
        throw SizeError("phase_grid_solve: N = " + std::to_string(n) + " exceeds max_antennas = " +
                        std::to_string(cfg.max_antennas) + " (cost is grid_points^N)");
    }
    const int g = cfg.grid_points;
    std::vector<Complex> phases(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
        phases[static_cast<std::size_t>(i)] =
            std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(g));
    }

    // Complex-domain objective evaluated incrementally entry by entry:
    //   rho*|c*H x - s|^2 + (1-rho)*c^2*|x - x0|^2
    // with partial H x sums accumulated along the recursion.
    const CMat h = [&] {
        const Eigen::Index k2 = p.hbar().rows();
        const Eigen::Index k = k2 / 2;
        CMat hc(k, n);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                hc(i, j) = Complex(p.hbar()(i, j), p.hbar()(i + k, j));
            }
        }
        return hc;
    }();
    const CVec s = collapse_complex(p.sbar());
    const CVec x0 = collapse_complex(p.x0bar());
    const double c = p.scale();
    const double c2 = c * c;
    const double rho = p.rho();

    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::vector<int> best_idx;
    double best_obj = std::numeric_limits<double>::infinity();

    // partial_hx[d] = sum of the first d entry contributions to H x.
    std::vector<CVec> partial_hx(static_cast<std::size_t>(n) + 1, CVec::Zero(s.size()));
    std::vector<double> partial_dist(static_cast<std::size_t>(n) + 1, 0.0);

    Eigen::Index depth = 0;
    while (true) {
        if (depth == n) {
            const double comm = (c * partial_hx[static_cast<std::size_t>(n)] - s).squaredNorm();
            const double obj = rho * comm + (1.0 - rho) * c2 * partial_dist[static_cast<std::size_t>(n)];
            if (obj < best_obj) {  // strict: lexicographically first tuple wins ties
                best_obj = obj;
                best_idx = idx;
            }
            --depth;
            while (depth >= 0 && ++idx[static_cast<std::size_t>(depth)] == g) {
                idx[static_cast<std::size_t>(depth)] = 0;
                --depth;
            }
            if (depth < 0) {
                break;
            }
        }
        const auto d = static_cast<std::size_t>(depth);
        const Complex e = phases[static_cast<std::size_t>(idx[d])];
        partial_hx[d + 1] = partial_hx[d] + h.col(depth) * e;
        partial_dist[d + 1] = partial_dist[d] + std::norm(e - x0(depth));
        ++depth;
    }

    PhaseGridResult result;
    result.objective = best_obj;
    RVec xbar(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex e = phases[static_cast<std::size_t>(best_idx[static_cast<std::size_t>(i)])];
        xbar(i) = e.real();
        xbar(i + n) = e.imag();
    }
    result.xbar = std::move(xbar);
    return result;
}

EvalContext make_eval_context(const JcasProblem& p, double n0, const std::vector<double>& grid,
                              double delta) {
    EvalContext ctx;
    ctx.n0 = n0;
    ctx.angle_grid = grid;
    ctx.delta = delta;
    ctx.reference = beam_pattern(Waveform(p.x0.entries, p.p_t, /*hard=*/true), grid, delta);
    return ctx;
}

std::uint64_t pgd_flops_per_iter(Eigen::Index n, Eigen::Index k) {
    const auto un = static_cast<std::uint64_t>(n);
    const auto uk = static_cast<std::uint64_t>(k);
    const std::uint64_t gram_matvec = 2 * un * (4 * un - 1);      // Hbar^T Hbar * x
    const std::uint64_t grad_combine = 12 * un;                   // three scaled 2N-vector terms
    const std::uint64_t step = 4 * un;                            // x - delta * grad
    const std::uint64_t projection = 6 * un;                      // per complex entry normalize
    const std::uint64_t objective_eval = 2 * uk * (4 * un - 1)    // Hbar * x
                                         + 8 * uk + 12 * un + 3;  // residual norms and weighting
    return gram_matvec + grad_combine + step + projection + objective_eval;
}

std::pair<Waveform, EvalReport> solve_frame(const JcasProblem& p, const FrameSolveConfig& cfg,
                                            const EvalContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<RealColumnProblem> columns = decompose_columns(p);
    std::vector<RVec> solutions;
    solutions.reserve(columns.size());
    std::uint64_t flops = 0;
    for (std::size_t m = 0; m < columns.size(); ++m) {
        if (cfg.solver == FrameSolver::Pgd) {
            Rng rng(derive_seed(cfg.seed, "pgd-col", m));
            const RVec x_init = RVec::Zero(2 * p.antennas());
            PgdResult r = pgd_solve_multistart(columns[m], cfg.pgd, x_init, rng);
            flops += r.total_iters * pgd_flops_per_iter(p.antennas(), p.users());
            solutions.push_back(std::move(r.xbar));
        } else {
            PhaseGridResult r = phase_grid_solve(columns[m], cfg.phase_grid);
            solutions.push_back(std::move(r.xbar));
        }
    }
    Waveform x = assemble_waveform(solutions, p.p_t, p.antennas());
    const auto t1 = std::chrono::steady_clock::now();

    EvalReport report;
    report.wall_time = std::chrono::duration<double>(t1 - t0).count();
    report.flops = flops;
    report.mui_power = mui_power(p.h, x, p.s);
    report.sinr = per_user_sinr(p.h, x, p.s, ctx.n0);
    report.sum_rate = sum_rate(report.sinr);
    report.beam_mse = beam_mse(beam_pattern(x, ctx.angle_grid, ctx.delta), ctx.reference);
    return {std::move(x), std::move(report)};
}

}  // namespace jcaswave
