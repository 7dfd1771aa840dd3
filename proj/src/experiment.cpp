#include "jcaswave/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace jcaswave {

namespace {

using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

Eigen::Index angle_grid_points(const AngleGridSpec& g) {
    if (g.step_deg <= 0.0) throw ConfigError("angle_grid.step_deg must be positive");
    if (g.max_deg < g.min_deg) throw ConfigError("angle_grid.max_deg must be >= min_deg");
    const double span = (g.max_deg - g.min_deg) / g.step_deg;
    const double rounded = std::round(span);
    if (std::abs(span - rounded) > 1e-9)
        throw ConfigError("angle_grid span must be an integer multiple of step_deg");
    return static_cast<Eigen::Index>(rounded) + 1;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.version != 1) throw ConfigError("unsupported config version");
    if (cfg.n < 1 || cfg.k < 1 || cfg.m < 1 || cfg.l < 1)
        throw ConfigError("dims must all be >= 1");
    if (cfg.batch_count < 1) throw ConfigError("batch_count must be >= 1");
    if (cfg.snr_grid_db.empty()) throw ConfigError("snr_grid_db must be nonempty");
    if (cfg.rho_grid.empty()) throw ConfigError("rho_grid must be nonempty");
    for (double r : cfg.rho_grid)
        if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rho values must lie in [0, 1]");
    for (double s : cfg.snr_grid_db)
        if (!std::isfinite(s)) throw ConfigError("snr_grid_db values must be finite");
    if (cfg.delta <= 0.0) throw ConfigError("delta must be positive");
    if (cfg.solvers.empty()) throw ConfigError("solvers must be nonempty");
    for (const std::string& s : cfg.solvers) {
        if (s != "pgd" && s != "unfolded") throw ConfigError("unknown solver '" + s + "'");
        if (std::count(cfg.solvers.begin(), cfg.solvers.end(), s) != 1)
            throw ConfigError("duplicate solver '" + s + "'");
    }
    if (cfg.timing.antennas.empty()) throw ConfigError("timing.antennas must be nonempty");
    for (Eigen::Index n : cfg.timing.antennas)
        if (n < 1) throw ConfigError("timing.antennas entries must be >= 1");
    if (cfg.timing.repetitions < 1) throw ConfigError("timing.repetitions must be >= 1");
    if (cfg.timing.warmup < 0) throw ConfigError("timing.warmup must be >= 0");
    if (cfg.timing.pgd_starts < 1) throw ConfigError("timing.pgd_starts must be >= 1");
    if (cfg.timing.pgd_iters < 1) throw ConfigError("timing.pgd_iters must be >= 1");
    angle_grid_points(cfg.angle_grid);
}

void expect_keys(const json& j, const char* where,
                 std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (std::string_view a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("unknown config key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

std::string variant_name(ChirpVariant v) {
    return v == ChirpVariant::Orthogonal ? "orthogonal" : "directional";
}

ChirpVariant variant_from_name(const std::string& s) {
    if (s == "orthogonal") return ChirpVariant::Orthogonal;
    if (s == "directional") return ChirpVariant::Directional;
    throw ConfigError("chirp.variant must be 'orthogonal' or 'directional'");
}

std::string init_name(WeightInit init) {
    return init == WeightInit::PgdCorrespondence ? "pgd" : "random";
}

WeightInit init_from_name(const std::string& s) {
    if (s == "pgd") return WeightInit::PgdCorrespondence;
    if (s == "random") return WeightInit::Random;
    throw ConfigError("train.init must be 'pgd' or 'random'");
}

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string provenance(const ExperimentConfig& cfg) {
    std::string out;
    out += "# config_hash=" + hash_hex(config_hash(cfg)) + "\n";
    out += "# seed=" + std::to_string(cfg.seed) + "\n";
    return out;
}

/// One designed-and-evaluated sweep cell: every channel's inputs, waveform,
/// and design-time report (SINR fields evaluated at the placeholder noise
/// power P_T; rate columns are re-derived per SNR by the callers).
struct CellData {
    std::vector<Channel> channels;
    std::vector<SymbolFrame> frames;
    std::vector<Waveform> waveforms;
    std::vector<EvalReport> reports;
};

CellData design_cell(const ExperimentConfig& cfg, double rho, const std::string& solver,
                     const UnfoldModel* model) {
    const double p_t = cfg.p_t();
    const BenchmarkWaveform x0 = chirp_benchmark(cfg.n, cfg.m, p_t, cfg.steer_angle(), cfg.delta,
                                                 cfg.chirp_variant);
    const std::vector<double> grid = cfg.angle_grid_radians();

    CellData cell;
    cell.channels.reserve(static_cast<std::size_t>(cfg.batch_count));
    cell.frames.reserve(static_cast<std::size_t>(cfg.batch_count));
    cell.waveforms.reserve(static_cast<std::size_t>(cfg.batch_count));
    cell.reports.reserve(static_cast<std::size_t>(cfg.batch_count));

    EvalContext ctx;
    for (int b = 0; b < cfg.batch_count; ++b) {
        Rng rng(derive_seed(cfg.seed, "eval-channel", static_cast<std::uint64_t>(b)));
        Channel h = sample_channel(cfg.k, cfg.n, rng);
        SymbolFrame s = sample_qpsk_frame(cfg.k, cfg.m, rng);
        JcasProblem p(h, s, x0, rho, p_t);
        if (b == 0) ctx = make_eval_context(p, p_t, grid, cfg.delta);

        if (solver == "pgd") {
            FrameSolveConfig fc;
            fc.solver = FrameSolver::Pgd;
            fc.pgd = cfg.pgd;
            fc.seed = derive_seed(cfg.seed, "pgd-frame", static_cast<std::uint64_t>(b));
            auto [x, report] = solve_frame(p, fc, ctx);
            cell.waveforms.push_back(std::move(x));
            cell.reports.push_back(std::move(report));
        } else if (solver == "unfolded") {
            if (model == nullptr) throw ConsistencyError("unfolded solver requires a model");
            auto [x, report] = infer_waveform(*model, p, ctx);
            cell.waveforms.push_back(std::move(x));
            cell.reports.push_back(std::move(report));
        } else {
            throw ConfigError("unknown solver '" + solver + "'");
        }
        cell.channels.push_back(std::move(h));
        cell.frames.push_back(std::move(s));
    }
    return cell;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double ExperimentConfig::steer_angle() const { return steer_angle_deg * kDegToRad; }

std::vector<double> ExperimentConfig::angle_grid_degrees() const {
    const Eigen::Index points = angle_grid_points(angle_grid);
    std::vector<double> out(static_cast<std::size_t>(points));
    for (Eigen::Index i = 0; i < points; ++i)
        out[static_cast<std::size_t>(i)] = angle_grid.min_deg + angle_grid.step_deg *
                                                                    static_cast<double>(i);
    return out;
}

std::vector<double> ExperimentConfig::angle_grid_radians() const {
    std::vector<double> out = angle_grid_degrees();
    for (double& a : out) a *= kDegToRad;
    return out;
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config(const json& j) {
    expect_keys(j, "config root",
                {"version", "dims", "p_t_dbm", "snr_grid_db", "rho_grid", "delta", "angle_grid",
                 "chirp", "solvers", "pgd", "train", "batch_count", "seed", "train_if_missing",
                 "timing"});
    ExperimentConfig cfg;
    cfg.version = get_or<int>(j, "version", cfg.version);
    if (cfg.version != 1) throw ConfigError("unsupported config version");

    if (j.contains("dims")) {
        const json& d = j.at("dims");
        expect_keys(d, "dims", {"n", "k", "m", "l"});
        cfg.n = get_or<Eigen::Index>(d, "n", cfg.n);
        cfg.k = get_or<Eigen::Index>(d, "k", cfg.k);
        cfg.m = get_or<Eigen::Index>(d, "m", cfg.m);
        cfg.l = get_or<Eigen::Index>(d, "l", cfg.l);
    }
    cfg.p_t_dbm = get_or<double>(j, "p_t_dbm", cfg.p_t_dbm);
    cfg.snr_grid_db = get_or<std::vector<double>>(j, "snr_grid_db", cfg.snr_grid_db);
    cfg.rho_grid = get_or<std::vector<double>>(j, "rho_grid", cfg.rho_grid);
    cfg.delta = get_or<double>(j, "delta", cfg.delta);

    if (j.contains("angle_grid")) {
        const json& a = j.at("angle_grid");
        expect_keys(a, "angle_grid", {"min_deg", "max_deg", "step_deg"});
        cfg.angle_grid.min_deg = get_or<double>(a, "min_deg", cfg.angle_grid.min_deg);
        cfg.angle_grid.max_deg = get_or<double>(a, "max_deg", cfg.angle_grid.max_deg);
        cfg.angle_grid.step_deg = get_or<double>(a, "step_deg", cfg.angle_grid.step_deg);
    }
    if (j.contains("chirp")) {
        const json& c = j.at("chirp");
        expect_keys(c, "chirp", {"variant", "steer_angle_deg"});
        cfg.chirp_variant =
            variant_from_name(get_or<std::string>(c, "variant", variant_name(cfg.chirp_variant)));
        cfg.steer_angle_deg = get_or<double>(c, "steer_angle_deg", cfg.steer_angle_deg);
    }
    cfg.solvers = get_or<std::vector<std::string>>(j, "solvers", cfg.solvers);

    if (j.contains("pgd")) {
        const json& p = j.at("pgd");
        expect_keys(p, "pgd", {"step_size", "max_iters", "tol", "project_every_iter", "starts"});
        if (p.contains("step_size") && !p.at("step_size").is_null())
            cfg.pgd.step_size = get_or<double>(p, "step_size", 0.0);
        cfg.pgd.max_iters = get_or<int>(p, "max_iters", cfg.pgd.max_iters);
        cfg.pgd.tol = get_or<double>(p, "tol", cfg.pgd.tol);
        cfg.pgd.project_every_iter =
            get_or<bool>(p, "project_every_iter", cfg.pgd.project_every_iter);
        cfg.pgd.starts = get_or<int>(p, "starts", cfg.pgd.starts);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        expect_keys(t, "train",
                    {"learning_rate", "decay", "decay_every", "batch_size", "steps", "init",
                     "grad_clip_norm", "restarts"});
        cfg.train.learning_rate = get_or<double>(t, "learning_rate", cfg.train.learning_rate);
        cfg.train.decay = get_or<double>(t, "decay", cfg.train.decay);
        cfg.train.decay_every = get_or<int>(t, "decay_every", cfg.train.decay_every);
        cfg.train.batch_size = get_or<int>(t, "batch_size", cfg.train.batch_size);
        cfg.train.steps = get_or<int>(t, "steps", cfg.train.steps);
        cfg.train.init = init_from_name(get_or<std::string>(t, "init", init_name(cfg.train.init)));
        cfg.train.grad_clip_norm = get_or<double>(t, "grad_clip_norm", cfg.train.grad_clip_norm);
        cfg.train.restarts = get_or<int>(t, "restarts", cfg.train.restarts);
    }
    cfg.batch_count = get_or<int>(j, "batch_count", cfg.batch_count);
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.train_if_missing = get_or<bool>(j, "train_if_missing", cfg.train_if_missing);

    if (j.contains("timing")) {
        const json& t = j.at("timing");
        expect_keys(t, "timing", {"antennas", "repetitions", "warmup", "pgd_starts", "pgd_iters"});
        if (t.contains("antennas")) {
            cfg.timing.antennas.clear();
            for (const json& v : t.at("antennas"))
                cfg.timing.antennas.push_back(v.get<Eigen::Index>());
        }
        cfg.timing.repetitions = get_or<int>(t, "repetitions", cfg.timing.repetitions);
        cfg.timing.warmup = get_or<int>(t, "warmup", cfg.timing.warmup);
        cfg.timing.pgd_starts = get_or<int>(t, "pgd_starts", cfg.timing.pgd_starts);
        cfg.timing.pgd_iters = get_or<int>(t, "pgd_iters", cfg.timing.pgd_iters);
    }
    validate_config(cfg);
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["version"] = cfg.version;
    j["dims"] = {{"n", cfg.n}, {"k", cfg.k}, {"m", cfg.m}, {"l", cfg.l}};
    j["p_t_dbm"] = cfg.p_t_dbm;
    j["snr_grid_db"] = cfg.snr_grid_db;
    j["rho_grid"] = cfg.rho_grid;
    j["delta"] = cfg.delta;
    j["angle_grid"] = {{"min_deg", cfg.angle_grid.min_deg},
                       {"max_deg", cfg.angle_grid.max_deg},
                       {"step_deg", cfg.angle_grid.step_deg}};
    j["chirp"] = {{"variant", variant_name(cfg.chirp_variant)},
                  {"steer_angle_deg", cfg.steer_angle_deg}};
    j["solvers"] = cfg.solvers;
    json pgd;
    if (cfg.pgd.step_size)
        pgd["step_size"] = *cfg.pgd.step_size;
    else
        pgd["step_size"] = nullptr;
    pgd["max_iters"] = cfg.pgd.max_iters;
    pgd["tol"] = cfg.pgd.tol;
    pgd["project_every_iter"] = cfg.pgd.project_every_iter;
    pgd["starts"] = cfg.pgd.starts;
    j["pgd"] = pgd;
    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"decay", cfg.train.decay},
                  {"decay_every", cfg.train.decay_every},
                  {"batch_size", cfg.train.batch_size},
                  {"steps", cfg.train.steps},
                  {"init", init_name(cfg.train.init)},
                  {"grad_clip_norm", cfg.train.grad_clip_norm},
                  {"restarts", cfg.train.restarts}};
    j["batch_count"] = cfg.batch_count;
    j["seed"] = cfg.seed;
    j["train_if_missing"] = cfg.train_if_missing;
    j["timing"] = {{"antennas", cfg.timing.antennas},
                   {"repetitions", cfg.timing.repetitions},
                   {"warmup", cfg.timing.warmup},
                   {"pgd_starts", cfg.timing.pgd_starts},
                   {"pgd_iters", cfg.timing.pgd_iters}};
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigReadError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a64(config_to_json(cfg).dump());
}

std::filesystem::path model_path(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                                 double rho) {
    // The remaining training knobs are folded into a short hash so that any
    // hyperparameter change retrains instead of silently reusing a stale file.
    char ident[256];
    std::snprintf(ident, sizeof ident, "lr%.17g_decay%.17g_every%d_batch%d_clip%.17g_init%d_k%lld_m%lld_r%d",
                  cfg.train.learning_rate, cfg.train.decay, cfg.train.decay_every,
                  cfg.train.batch_size, cfg.train.grad_clip_norm,
                  cfg.train.init == WeightInit::PgdCorrespondence ? 0 : 1,
                  static_cast<long long>(cfg.k), static_cast<long long>(cfg.m),
                  cfg.train.restarts);
    char name[160];
    std::snprintf(name, sizeof name, "unfold_n%lld_l%lld_rho%g_seed%llu_steps%d_t%08llx.model",
                  static_cast<long long>(cfg.n), static_cast<long long>(cfg.l), rho,
                  static_cast<unsigned long long>(cfg.seed), cfg.train.steps,
                  static_cast<unsigned long long>(fnv1a64(ident) & 0xffffffffull));
    return out_dir / "models" / name;
}

UnfoldModel obtain_model(const ExperimentConfig& cfg, double rho,
                         const std::filesystem::path& out_dir) {
    const std::filesystem::path path = model_path(out_dir, cfg, rho);
    if (std::filesystem::exists(path)) {
        UnfoldModel model = load_model(path);
        if (model.n != cfg.n || model.depth() != cfg.l)
            throw ConsistencyError("stored model " + path.string() +
                                   " does not match the configured dimensions");
        if (std::abs(model.rho - rho) > 1e-12)
            throw ConsistencyError("stored model " + path.string() + " was trained for rho=" +
                                   std::to_string(model.rho));
        return model;
    }
    if (!cfg.train_if_missing) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "no trained model for rho=%g (expected %s); run the train subcommand or "
                      "set train_if_missing",
                      rho, path.string().c_str());
        throw MissingModelError(msg);
    }
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train", static_cast<std::uint64_t>(std::llround(rho * 1e6)));
    TrainScenario scenario;
    scenario.n = cfg.n;
    scenario.k = cfg.k;
    scenario.m = cfg.m;
    scenario.l = cfg.l;
    scenario.p_t = cfg.p_t();
    scenario.chirp_variant = cfg.chirp_variant;
    scenario.steer_angle = cfg.steer_angle();
    scenario.delta = cfg.delta;
    UnfoldModel model = train(tc, scenario, rho);
    std::filesystem::create_directories(path.parent_path());
    save_model(model, path);
    return model;
}

SweepResult run_rate_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    validate_config(cfg);
    const double p_t = cfg.p_t();
    const double inv = 1.0 / static_cast<double>(cfg.batch_count);

    SweepResult result;
    for (double rho : cfg.rho_grid) {
        std::vector<std::vector<SweepRow>> per_solver;
        for (const std::string& solver : cfg.solvers) {
            UnfoldModel model;
            const UnfoldModel* mp = nullptr;
            if (solver == "unfolded") {
                model = obtain_model(cfg, rho, out_dir);
                mp = &model;
            }
            CellData cell = design_cell(cfg, rho, solver, mp);

            double mui = 0.0, mse = 0.0, wall = 0.0, flops = 0.0;
            for (const EvalReport& r : cell.reports) {
                mui += r.mui_power;
                mse += r.beam_mse;
                wall += r.wall_time;
                flops += static_cast<double>(r.flops);
            }
            mui *= inv;
            mse *= inv;
            wall *= inv;
            flops *= inv;

            std::vector<SweepRow> rows;
            for (double snr : cfg.snr_grid_db) {
                const double n0 = p_t / db_to_linear(snr);
                double rate = 0.0;
                for (int b = 0; b < cfg.batch_count; ++b) {
                    const std::size_t ib = static_cast<std::size_t>(b);
                    rate += sum_rate(per_user_sinr(cell.channels[ib], cell.waveforms[ib],
                                                   cell.frames[ib], n0));
                }
                rows.push_back({rho, snr, solver, rate * inv, mui, mse, wall, flops});
            }
            per_solver.push_back(std::move(rows));
        }
        for (std::size_t si = 0; si < cfg.snr_grid_db.size(); ++si)
            for (std::size_t sv = 0; sv < cfg.solvers.size(); ++sv)
                result.rows.push_back(per_solver[sv][si]);
    }
    return result;
}

std::vector<TradeoffRow> run_tradeoff(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_dir) {
    const SweepResult sweep = run_rate_sweep(cfg, out_dir);
    std::vector<TradeoffRow> rows;
    rows.reserve(sweep.rows.size());
    for (const SweepRow& r : sweep.rows)
        rows.push_back({r.rho, r.snr_db, r.solver, r.avg_sum_rate, r.avg_beam_mse});
    return rows;
}

BeamTable run_beam_pattern(const ExperimentConfig& cfg, double rho,
                           const std::filesystem::path& out_dir) {
    validate_config(cfg);
    const double p_t = cfg.p_t();
    const std::vector<double> grid = cfg.angle_grid_radians();
    const BenchmarkWaveform x0 = chirp_benchmark(cfg.n, cfg.m, p_t, cfg.steer_angle(), cfg.delta,
                                                 cfg.chirp_variant);

    BeamTable table;
    table.angles_deg = cfg.angle_grid_degrees();
    table.columns.push_back("reference");
    table.power.push_back(beam_pattern(Waveform(x0.entries, p_t, true), grid, cfg.delta).power);

    const double inv = 1.0 / static_cast<double>(cfg.batch_count);
    for (const std::string& solver : cfg.solvers) {
        UnfoldModel model;
        const UnfoldModel* mp = nullptr;
        if (solver == "unfolded") {
            model = obtain_model(cfg, rho, out_dir);
            mp = &model;
        }
        CellData cell = design_cell(cfg, rho, solver, mp);
        std::vector<double> acc(grid.size(), 0.0);
        for (const Waveform& x : cell.waveforms) {
            const BeamPattern bp = beam_pattern(x, grid, cfg.delta);
            for (std::size_t a = 0; a < acc.size(); ++a) acc[a] += bp.power[a];
        }
        for (double& v : acc) v *= inv;
        table.columns.push_back(solver);
        table.power.push_back(std::move(acc));
    }
    return table;
}

std::vector<TimingRow> run_timing(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const double p_t = cfg.p_t();
    const std::vector<double> grid = cfg.angle_grid_radians();
    std::vector<TimingRow> rows;

    for (Eigen::Index n : cfg.timing.antennas) {
        const BenchmarkWaveform x0 = chirp_benchmark(n, cfg.m, p_t, cfg.steer_angle(), cfg.delta,
                                                     cfg.chirp_variant);
        // Run time does not depend on the weight values, so timing uses a
        // correspondence-initialized model and needs no training.
        Rng model_rng(derive_seed(cfg.seed, "timing-model", static_cast<std::uint64_t>(n)));
        const UnfoldModel model =
            make_model(n, cfg.l, 1.0, p_t, WeightInit::PgdCorrespondence, model_rng);

        for (const std::string& solver : cfg.solvers) {
            std::vector<double> times;
            double flops_acc = 0.0;
            const int total = cfg.timing.warmup + cfg.timing.repetitions;
            EvalContext ctx;
            for (int rep = 0; rep < total; ++rep) {
                const std::uint64_t tag = static_cast<std::uint64_t>(n) * 100000u +
                                          static_cast<std::uint64_t>(rep);
                Rng rng(derive_seed(cfg.seed, "timing-channel", tag));
                Channel h = sample_channel(cfg.k, n, rng);
                SymbolFrame s = sample_qpsk_frame(cfg.k, cfg.m, rng);
                JcasProblem p(std::move(h), std::move(s), x0, 1.0, p_t);
                if (rep == 0) ctx = make_eval_context(p, p_t, grid, cfg.delta);

                EvalReport report;
                if (solver == "pgd") {
                    FrameSolveConfig fc;
                    fc.solver = FrameSolver::Pgd;
                    fc.pgd.starts = cfg.timing.pgd_starts;
                    fc.pgd.max_iters = cfg.timing.pgd_iters;
                    fc.pgd.tol = 0.0;  // run the full iteration budget
                    fc.seed = derive_seed(cfg.seed, "timing-pgd", tag);
                    report = solve_frame(p, fc, ctx).second;
                } else {
                    report = infer_waveform(model, p, ctx).second;
                }
                if (rep >= cfg.timing.warmup) {
                    times.push_back(report.wall_time);
                    flops_acc += static_cast<double>(report.flops);
                }
            }
            rows.push_back({solver, n, median(std::move(times)),
                            flops_acc / static_cast<double>(cfg.timing.repetitions)});
        }
    }
    return rows;
}

std::vector<EvalReport> run_eval_cell(const ExperimentConfig& cfg, double rho, double snr_db,
                                      const std::string& solver,
                                      const std::filesystem::path& out_dir,
                                      const std::filesystem::path& model_override) {
    validate_config(cfg);
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");

    UnfoldModel model;
    const UnfoldModel* mp = nullptr;
    if (solver == "unfolded") {
        if (!model_override.empty()) {
            if (!std::filesystem::exists(model_override))
                throw ConfigReadError("model file not found: " + model_override.string());
            model = load_model(model_override);
            if (model.n != cfg.n)
                throw DimensionError("model antenna count does not match configured dims");
        } else {
            model = obtain_model(cfg, rho, out_dir);
        }
        mp = &model;
    } else if (solver != "pgd") {
        throw ConfigError("unknown solver '" + solver + "'");
    }

    CellData cell = design_cell(cfg, rho, solver, mp);
    const double n0 = cfg.p_t() / db_to_linear(snr_db);
    std::vector<EvalReport> out;
    out.reserve(cell.reports.size());
    for (int b = 0; b < cfg.batch_count; ++b) {
        const std::size_t ib = static_cast<std::size_t>(b);
        EvalReport r = cell.reports[ib];
        r.sinr = per_user_sinr(cell.channels[ib], cell.waveforms[ib], cell.frames[ib], n0);
        r.sum_rate = sum_rate(r.sinr);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec)
            throw CsvWriteError("cannot create output directory " +
                                path.parent_path().string() + ": " + ec.message());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CsvWriteError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw CsvWriteError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw CsvWriteError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_rates_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                     const SweepResult& result) {
    std::string out;
    out += "# rates: average performance per (rho, snr_db, solver) cell over " +
           std::to_string(cfg.batch_count) + " channels\n";
    out += provenance(cfg);
    out += "# units: avg_sum_rate bits/s/Hz; avg_mui watts; avg_beam_mse linear power squared; "
           "avg_flops per channel design\n";
    out += "rho,snr_db,solver,avg_sum_rate,avg_mui,avg_beam_mse,avg_flops\n";
    for (const SweepRow& r : result.rows) {
        out += format_double(r.rho) + "," + format_double(r.snr_db) + "," + r.solver + "," +
               format_double(r.avg_sum_rate) + "," + format_double(r.avg_mui) + "," +
               format_double(r.avg_beam_mse) + "," + format_double(r.avg_flops) + "\n";
    }
    write_text_atomic(path, out);
}

void write_tradeoff_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                        const std::vector<TradeoffRow>& rows) {
    std::string out;
    out += "# tradeoff: average sum rate vs average beam-pattern MSE over " +
           std::to_string(cfg.batch_count) + " channels\n";
    out += provenance(cfg);
    out += "# units: avg_sum_rate bits/s/Hz; avg_beam_mse linear power squared\n";
    out += "rho,snr_db,solver,avg_sum_rate,avg_beam_mse\n";
    for (const TradeoffRow& r : rows) {
        out += format_double(r.rho) + "," + format_double(r.snr_db) + "," + r.solver + "," +
               format_double(r.avg_sum_rate) + "," + format_double(r.avg_beam_mse) + "\n";
    }
    write_text_atomic(path, out);
}

void write_beam_csv(const std::filesystem::path& path, const ExperimentConfig& cfg, double rho,
                    const BeamTable& table) {
    std::string out;
    out += "# beam: transmit power vs angle, averaged over " + std::to_string(cfg.batch_count) +
           " channels, rho=" + format_double(rho) + "\n";
    out += provenance(cfg);
    out += "# units: power columns in linear watts\n";
    out += "angle_deg";
    for (const std::string& c : table.columns) out += "," + c;
    out += "\n";
    for (std::size_t a = 0; a < table.angles_deg.size(); ++a) {
        out += format_double(table.angles_deg[a]);
        for (const std::vector<double>& col : table.power) out += "," + format_double(col[a]);
        out += "\n";
    }
    write_text_atomic(path, out);
}

void write_timing_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                      const std::vector<TimingRow>& rows) {
    std::string out;
    out += "# timing: per-channel design time, median of " +
           std::to_string(cfg.timing.repetitions) + " repetitions after " +
           std::to_string(cfg.timing.warmup) + " warmups\n";
    out += provenance(cfg);
    out += "# per_channel_seconds is measured wall time; it varies across runs\n";
    out += "solver,antennas,per_channel_seconds,flops\n";
    for (const TimingRow& r : rows) {
        out += r.solver + "," + std::to_string(r.antennas) + "," +
               format_double(r.per_channel_seconds) + "," + format_double(r.flops) + "\n";
    }
    write_text_atomic(path, out);
}

void write_eval_csv(const std::filesystem::path& path, const ExperimentConfig& cfg, double rho,
                    double snr_db, const std::string& solver,
                    const std::vector<EvalReport>& reports) {
    const bool raw = !reports.empty() && reports.front().raw_mui_power.has_value();
    std::string out;
    out += "# eval: per-channel metrics, rho=" + format_double(rho) +
           " snr_db=" + format_double(snr_db) + " solver=" + solver + "\n";
    out += provenance(cfg);
    out += "# units: sum_rate bits/s/Hz; mui watts; beam_mse linear power squared\n";
    out += "channel,sum_rate,mui,beam_mse,flops";
    if (raw) out += ",raw_mui,raw_beam_mse";
    out += "\n";
    for (std::size_t b = 0; b < reports.size(); ++b) {
        const EvalReport& r = reports[b];
        out += std::to_string(b) + "," + format_double(r.sum_rate) + "," +
               format_double(r.mui_power) + "," + format_double(r.beam_mse) + "," +
               format_double(static_cast<double>(r.flops));
        if (raw)
            out += "," + format_double(r.raw_mui_power.value_or(0.0)) + "," +
                   format_double(r.raw_beam_mse.value_or(0.0));
        out += "\n";
    }
    write_text_atomic(path, out);
}

}  // namespace jcaswave
