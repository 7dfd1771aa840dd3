#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "jcaswave/solvers.hpp"

#include "jcaswave/problem.hpp"
#include "jcaswave/signal_model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace jcaswave;

namespace {

JcasProblem make_problem(Eigen::Index k, Eigen::Index n, Eigen::Index m, double rho, double p_t,
                         std::uint64_t seed) {
    Rng rng(seed);
    Channel h = sample_channel(k, n, rng);
    SymbolFrame s = sample_qpsk_frame(k, m, rng);
    BenchmarkWaveform x0 = chirp_benchmark(n, m, p_t);
    return JcasProblem(std::move(h), std::move(s), std::move(x0), rho, p_t);
}

RealColumnProblem first_column(const JcasProblem& p) { return decompose_columns(p)[0]; }

}  // namespace

TEST_CASE("pgd recovers the benchmark column exactly at rho = 0") {
    // With rho = 0 the objective is a pure quadratic in xbar whose minimizer
    // x0bar is feasible, so one exact-step iteration lands on it.
    const Eigen::Index n = 8;
    const double p_t = 2.0;
    JcasProblem p = make_problem(4, n, 8, 0.0, p_t, 1);
    RealColumnProblem c = first_column(p);

    PgdConfig cfg;
    cfg.step_size = static_cast<double>(n) / (2.0 * p_t);  // exact quadratic step
    cfg.max_iters = 5;
    PgdResult r = pgd_solve(c, cfg, RVec::Zero(2 * n));
    CHECK((r.xbar - c.x0bar()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.objective < 1e-24);
}

TEST_CASE("pgd trace is nonincreasing and best-so-far feasible") {
    JcasProblem p = make_problem(4, 8, 10, 0.6, 1.0, 2);
    RealColumnProblem c = first_column(p);
    PgdConfig cfg;
    cfg.max_iters = 200;
    PgdResult r = pgd_solve(c, cfg, RVec::Zero(16));
    REQUIRE(!r.trace.empty());
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1] + 1e-15);
    CHECK(r.objective == doctest::Approx(r.trace.back()).epsilon(1e-15));
    // Output is feasible (unit modulus per complex entry).
    for (Eigen::Index i = 0; i < 8; ++i)
        CHECK(std::hypot(r.xbar[i], r.xbar[8 + i]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(objective(c, r.xbar) == doctest::Approx(r.objective).epsilon(1e-15));
}

TEST_CASE("pgd validation") {
    JcasProblem p = make_problem(2, 4, 4, 0.5, 1.0, 3);
    RealColumnProblem c = first_column(p);
    PgdConfig cfg;

    RVec infeasible = RVec::Constant(8, 0.5);
    CHECK_THROWS_AS(pgd_solve(c, cfg, infeasible), ConstraintError);

    RVec short_init = RVec::Zero(6);
    CHECK_THROWS_AS(pgd_solve(c, cfg, short_init), DimensionError);

    PgdConfig bad = cfg;
    bad.max_iters = 0;
    CHECK_THROWS_AS(pgd_solve(c, bad, RVec::Zero(8)), ParameterError);
    bad = cfg;
    bad.step_size = -1.0;
    CHECK_THROWS_AS(pgd_solve(c, bad, RVec::Zero(8)), ParameterError);
    bad = cfg;
    bad.starts = 0;
    Rng rng(1);
    CHECK_THROWS_AS(pgd_solve_multistart(c, bad, RVec::Zero(8), rng), ParameterError);
}

TEST_CASE("pgd reaches the phase-grid oracle on a tiny instance") {
    // N = 2, K = 1, M = 1, rho = 1: exhaustive 720^2 grid is the oracle.
    const Eigen::Index n = 2;
    Rng rng(7);
    Channel h = sample_channel(1, n, rng);
    SymbolFrame s = sample_qpsk_frame(1, 1, rng);
    BenchmarkWaveform x0 = chirp_benchmark(n, 2, 1.0);
    CVec x0_col = x0.entries.col(0);
    RealColumnProblem c = RealColumnProblem::from_complex(h, s.entries.col(0), x0_col, 1.0, 1.0);

    PhaseGridConfig gcfg;
    PhaseGridResult oracle = phase_grid_solve(c, gcfg);

    PgdConfig cfg;
    cfg.starts = 8;
    cfg.max_iters = 500;
    Rng start_rng(17);
    PgdResult r = pgd_solve_multistart(c, cfg, RVec::Zero(2 * n), start_rng);
    CHECK(r.objective <= oracle.objective + 1e-3);
    CHECK(r.total_iters > 0);
}

TEST_CASE("multistart never loses to single start") {
    JcasProblem p = make_problem(3, 4, 4, 0.8, 1.0, 9);
    RealColumnProblem c = first_column(p);
    PgdConfig single;
    single.max_iters = 300;
    PgdResult r1 = pgd_solve(c, single, RVec::Zero(8));
    PgdConfig multi = single;
    multi.starts = 6;
    Rng rng(23);
    PgdResult rm = pgd_solve_multistart(c, multi, RVec::Zero(8), rng);
    CHECK(rm.objective <= r1.objective + 1e-15);
}

TEST_CASE("pgd determinism") {
    JcasProblem p = make_problem(4, 8, 8, 0.5, 1.0, 11);
    RealColumnProblem c = first_column(p);
    PgdConfig cfg;
    cfg.starts = 4;
    Rng a(99), b(99);
    PgdResult ra = pgd_solve_multistart(c, cfg, RVec::Zero(16), a);
    PgdResult rb = pgd_solve_multistart(c, cfg, RVec::Zero(16), b);
    CHECK((ra.xbar - rb.xbar).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ra.objective == rb.objective);
}

TEST_CASE("project_every_iter = false still returns a feasible point") {
    JcasProblem p = make_problem(3, 6, 6, 0.7, 1.5, 13);
    RealColumnProblem c = first_column(p);
    PgdConfig cfg;
    cfg.project_every_iter = false;
    cfg.max_iters = 100;
    PgdResult r = pgd_solve(c, cfg, RVec::Zero(12));
    for (Eigen::Index i = 0; i < 6; ++i)
        CHECK(std::hypot(r.xbar[i], r.xbar[6 + i]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("phase_grid_solve") {
    // rho = 0 with on-grid benchmark phases: the oracle lands on x0bar exactly.
    const Eigen::Index n = 2;
    Rng rng(19);
    Channel h = sample_channel(1, n, rng);
    CVec s_col = CVec::Constant(1, Complex(1.0, 0.0));
    const double p_t = 1.0;
    const double amp = std::sqrt(p_t / n);
    CVec x0_col(n);
    const double two_pi = 2.0 * std::numbers::pi;
    x0_col[0] = std::polar(amp, two_pi * 10.0 / 720.0);
    x0_col[1] = std::polar(amp, two_pi * 500.0 / 720.0);
    RealColumnProblem c = RealColumnProblem::from_complex(h, s_col, x0_col, 0.0, p_t);
    PhaseGridConfig cfg;
    PhaseGridResult r = phase_grid_solve(c, cfg);
    CHECK(r.objective < 1e-20);
    CHECK((r.xbar - c.x0bar()).cwiseAbs().maxCoeff() < 1e-12);

    // N = 1, K = 1, rho = 1: minimizes |c * h * x - s|^2 over the circle; with
    // h real positive the best grid phase aligns x with s.
    Channel h1(CMat::Constant(1, 1, Complex(2.0, 0.0)));
    CVec s1 = CVec::Constant(1, std::polar(1.0, two_pi * 100.0 / 720.0));
    CVec x01 = CVec::Constant(1, Complex(1.0, 0.0));
    RealColumnProblem c1 = RealColumnProblem::from_complex(h1, s1, x01, 1.0, 1.0);
    PhaseGridResult r1 = phase_grid_solve(c1, cfg);
    // x aligns with s: residual |2 - 1| = 1 in amplitude, objective 1.
    CHECK(r1.objective == doctest::Approx(1.0).epsilon(1e-12));
    CVec xc = collapse_complex(r1.xbar);
    CHECK(std::arg(xc[0]) == doctest::Approx(two_pi * 100.0 / 720.0).epsilon(1e-9));
}

TEST_CASE("phase_grid refinement and guards") {
    Rng rng(29);
    Channel h = sample_channel(1, 2, rng);
    SymbolFrame s = sample_qpsk_frame(1, 1, rng);
    BenchmarkWaveform x0 = chirp_benchmark(2, 2, 1.0);
    RealColumnProblem c =
        RealColumnProblem::from_complex(h, s.entries.col(0), x0.entries.col(0), 0.5, 1.0);

    PhaseGridConfig coarse;
    coarse.grid_points = 180;
    PhaseGridConfig fine;
    fine.grid_points = 720;
    // A finer grid never returns a worse minimum when it refines the coarse one.
    PhaseGridResult rc = phase_grid_solve(c, coarse);
    PhaseGridResult rf = phase_grid_solve(c, fine);
    CHECK(rf.objective <= rc.objective + 1e-15);

    PhaseGridConfig bad;
    bad.grid_points = 1;
    CHECK_THROWS_AS(phase_grid_solve(c, bad), ParameterError);

    // Antenna cap: enumeration cost is grid_points^N.
    JcasProblem big = make_problem(2, 4, 4, 0.5, 1.0, 31);
    RealColumnProblem cb = first_column(big);
    PhaseGridConfig capped;
    capped.max_antennas = 3;
    CHECK_THROWS_AS(phase_grid_solve(cb, capped), SizeError);
}

TEST_CASE("pgd_default_step") {
    JcasProblem p = make_problem(3, 5, 5, 0.5, 2.0, 37);
    RealColumnProblem c = first_column(p);
    const double step = pgd_default_step(c);
    CHECK(step > 0.0);
    // 0.1 * N / (P_T * lambda_max) against a dense eigensolver.
    Eigen::SelfAdjointEigenSolver<RMat> es(c.hbar_t_hbar());
    const double lmax = es.eigenvalues().maxCoeff();
    CHECK(step == doctest::Approx(0.1 * 5.0 / (2.0 * lmax)).epsilon(1e-10));
}

TEST_CASE("solve_frame rho = 0 returns the benchmark waveform") {
    const Eigen::Index n = 4, m = 6;
    const double p_t = 2.0;
    JcasProblem p = make_problem(2, n, m, 0.0, p_t, 41);
    FrameSolveConfig fc;
    fc.pgd.step_size = static_cast<double>(n) / (2.0 * p_t);
    fc.pgd.max_iters = 10;
    EvalContext ctx = make_eval_context(p, 0.1, uniform_angle_grid(-1.5, 1.5, 61), 0.5);
    auto [w, report] = solve_frame(p, fc, ctx);
    CHECK((w.entries - p.x0.entries).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(report.beam_mse < 1e-18);
    CHECK(report.wall_time > 0.0);
    CHECK(report.flops > 0);
    CHECK(std::isfinite(report.sum_rate));
    CHECK(!report.raw_mui_power.has_value());
}

TEST_CASE("solve_frame rho = 1 drives MUI to the oracle floor") {
    // K = N = 2, H = (1/c) * I, s entries on the 720-point grid: the scaled
    // identity channel makes per-column MUI minimization a phase alignment,
    // solvable to grid accuracy.
    const Eigen::Index n = 2, m = 2;
    const double p_t = 2.0;
    const double c = std::sqrt(p_t / n);
    Channel h(CMat::Identity(2, 2) / c);
    const double two_pi = 2.0 * std::numbers::pi;
    CMat s(2, 2);
    s << std::polar(1.0, two_pi * 3.0 / 720.0), std::polar(1.0, two_pi * 100.0 / 720.0),
        std::polar(1.0, two_pi * 200.0 / 720.0), std::polar(1.0, two_pi * 660.0 / 720.0);
    SymbolFrame frame(s);
    BenchmarkWaveform x0 = chirp_benchmark(n, m, p_t);
    JcasProblem p(h, frame, x0, 1.0, p_t);

    FrameSolveConfig fc;
    fc.pgd.starts = 8;
    fc.seed = 5;
    EvalContext ctx = make_eval_context(p, 0.1, uniform_angle_grid(-1.5, 1.5, 61), 0.5);
    auto [w, report] = solve_frame(p, fc, ctx);
    CHECK(report.mui_power < 1e-3);

    // Determinism: same config and seed reproduce the waveform bit for bit.
    auto [w2, report2] = solve_frame(p, fc, ctx);
    CHECK((w.entries - w2.entries).cwiseAbs().maxCoeff() == 0.0);
    CHECK(report.mui_power == report2.mui_power);
}

TEST_CASE("pgd_flops_per_iter") {
    CHECK(pgd_flops_per_iter(8, 4) > 0);
    // More antennas or users never reduce the count.
    CHECK(pgd_flops_per_iter(16, 4) > pgd_flops_per_iter(8, 4));
    CHECK(pgd_flops_per_iter(8, 8) >= pgd_flops_per_iter(8, 4));
}
