#include "jcaswave/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace jcaswave {

namespace {

// Exit codes follow the sysexits convention so failure classes are
// distinguishable in scripts.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 64;     // bad flags or subcommand
constexpr int kExitData = 65;      // invalid config or input data
constexpr int kExitNoInput = 66;   // unreadable config or model file
constexpr int kExitNoModel = 69;   // trained model unavailable
constexpr int kExitInternal = 70;  // unexpected failure
constexpr int kExitIo = 74;        // cannot write outputs

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string model_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> rho;
    double snr_db = 0.0;
    std::string solver;
    std::string gen_out;
};

ExperimentConfig resolve_config(const CliOptions& opt) {
    ExperimentConfig cfg =
        opt.config_path.empty() ? default_config() : load_config(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    return cfg;
}

int dispatch(const std::string& cmd, const CliOptions& opt) {
    const std::filesystem::path out_dir = opt.out_dir;

    if (cmd == "gen-config") {
        const std::string text = config_to_json(default_config()).dump(2) + "\n";
        if (opt.gen_out.empty()) {
            std::cout << text;
        } else {
            write_text_atomic(opt.gen_out, text);
            std::cout << "wrote " << opt.gen_out << "\n";
        }
        return kExitOk;
    }

    ExperimentConfig cfg = resolve_config(opt);

    if (cmd == "train") {
        std::vector<double> rhos = opt.rho ? std::vector<double>{*opt.rho} : cfg.rho_grid;
        cfg.train_if_missing = true;
        for (double rho : rhos) {
            const std::filesystem::path path = model_path(out_dir, cfg, rho);
            if (std::filesystem::exists(path)) {
                std::cout << "rho=" << format_double(rho) << " exists " << path.string() << "\n";
                continue;
            }
            const UnfoldModel model = obtain_model(cfg, rho, out_dir);
            std::cout << "rho=" << format_double(rho) << " trained " << path.string()
                      << " final_loss=" << format_double(model.metadata.final_train_loss) << "\n";
        }
        return kExitOk;
    }
    if (cmd == "eval") {
        const double rho = opt.rho.value_or(cfg.rho_grid.front());
        const std::string solver = opt.solver.empty() ? cfg.solvers.front() : opt.solver;
        const std::vector<EvalReport> reports =
            run_eval_cell(cfg, rho, opt.snr_db, solver, out_dir, opt.model_path);
        write_eval_csv(out_dir / "eval.csv", cfg, rho, opt.snr_db, solver, reports);
        double rate = 0.0, mui = 0.0, mse = 0.0;
        for (const EvalReport& r : reports) {
            rate += r.sum_rate;
            mui += r.mui_power;
            mse += r.beam_mse;
        }
        const double inv = 1.0 / static_cast<double>(reports.size());
        std::cout << "rho=" << format_double(rho) << " snr_db=" << format_double(opt.snr_db)
                  << " solver=" << solver << " avg_sum_rate=" << format_double(rate * inv)
                  << " avg_mui=" << format_double(mui * inv)
                  << " avg_beam_mse=" << format_double(mse * inv) << "\n";
        std::cout << "wrote " << (out_dir / "eval.csv").string() << "\n";
        return kExitOk;
    }
    if (cmd == "sweep-rate") {
        const SweepResult result = run_rate_sweep(cfg, out_dir);
        write_rates_csv(out_dir / "rates.csv", cfg, result);
        std::cout << "wrote " << (out_dir / "rates.csv").string() << " ("
                  << result.rows.size() << " rows)\n";
        return kExitOk;
    }
    if (cmd == "beam") {
        const double rho = opt.rho.value_or(cfg.rho_grid.front());
        const BeamTable table = run_beam_pattern(cfg, rho, out_dir);
        write_beam_csv(out_dir / "beam.csv", cfg, rho, table);
        std::cout << "wrote " << (out_dir / "beam.csv").string() << " ("
                  << table.angles_deg.size() << " angles)\n";
        return kExitOk;
    }
    if (cmd == "tradeoff") {
        const std::vector<TradeoffRow> rows = run_tradeoff(cfg, out_dir);
        write_tradeoff_csv(out_dir / "tradeoff.csv", cfg, rows);
        std::cout << "wrote " << (out_dir / "tradeoff.csv").string() << " (" << rows.size()
                  << " rows)\n";
        return kExitOk;
    }
    if (cmd == "timing") {
        const std::vector<TimingRow> rows = run_timing(cfg);
        write_timing_csv(out_dir / "timing.csv", cfg, rows);
        for (const TimingRow& r : rows)
            std::cout << r.solver << " n=" << r.antennas
                      << " per_channel_seconds=" << format_double(r.per_channel_seconds) << "\n";
        std::cout << "wrote " << (out_dir / "timing.csv").string() << "\n";
        return kExitOk;
    }
    throw ConfigError("unknown subcommand '" + cmd + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"constant-modulus dual-function waveform design experiments"};
    app.require_subcommand(1);

    CliOptions opt;
    const auto add_common = [&opt](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "experiment config JSON path");
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--out-dir", opt.out_dir, "output directory (default: out)");
    };

    CLI::App* train = app.add_subcommand("train", "train and store unfolded models");
    add_common(train);
    train->add_option("--rho", opt.rho, "train only this rho instead of the whole grid");

    CLI::App* eval = app.add_subcommand("eval", "evaluate one (rho, snr, solver) cell");
    add_common(eval);
    eval->add_option("--rho", opt.rho, "tradeoff weight (default: first grid value)");
    eval->add_option("--snr-db", opt.snr_db, "transmit SNR in dB (default: 0)");
    eval->add_option("--solver", opt.solver, "pgd or unfolded (default: first configured)");
    eval->add_option("--model", opt.model_path, "explicit model file (unfolded only)");

    CLI::App* sweep = app.add_subcommand("sweep-rate", "rate vs SNR sweep over the rho grid");
    add_common(sweep);

    CLI::App* beam = app.add_subcommand("beam", "averaged beam patterns for one rho");
    add_common(beam);
    beam->add_option("--rho", opt.rho, "tradeoff weight (default: first grid value)");

    CLI::App* tradeoff = app.add_subcommand("tradeoff", "rate vs beam-MSE frontier");
    add_common(tradeoff);

    CLI::App* timing = app.add_subcommand("timing", "per-channel design-time measurements");
    add_common(timing);

    CLI::App* gen = app.add_subcommand("gen-config", "emit the default config JSON");
    gen->add_option("--out", opt.gen_out, "write to this path instead of stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        return dispatch(app.get_subcommands().front()->get_name(), opt);
    } catch (const MissingModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoModel;
    } catch (const ConfigReadError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoInput;
    } catch (const CsvWriteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace jcaswave
