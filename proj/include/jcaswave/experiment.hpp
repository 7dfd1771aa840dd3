#pragma once

#include "jcaswave/solvers.hpp"
#include "jcaswave/unfold_net.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace jcaswave {

/// A sweep needs a trained model that is neither on disk nor allowed to be
/// trained on the fly.
class MissingModelError : public Error {
public:
    explicit MissingModelError(const std::string& msg) : Error(msg) {}
};

/// Config file cannot be opened or read.
class ConfigReadError : public Error {
public:
    explicit ConfigReadError(const std::string& msg) : Error(msg) {}
};

/// Output CSV cannot be written.
class CsvWriteError : public Error {
public:
    explicit CsvWriteError(const std::string& msg) : Error(msg) {}
};

struct AngleGridSpec {
    double min_deg = -90.0;
    double max_deg = 90.0;
    double step_deg = 1.0;
};

struct TimingSpec {
    std::vector<Eigen::Index> antennas{8, 16};
    int repetitions = 10;
    int warmup = 2;
    int pgd_starts = 8;
    int pgd_iters = 500;
};

/// Full experiment description. Everything an output CSV contains is a
/// deterministic function of this struct (wall-clock timings excepted).
struct ExperimentConfig {
    int version = 1;
    Eigen::Index n = 8;   // transmit antennas
    Eigen::Index k = 4;   // users
    Eigen::Index m = 20;  // frame length
    Eigen::Index l = 10;  // network depth
    double p_t_dbm = 30.0;
    std::vector<double> snr_grid_db{-2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0};
    std::vector<double> rho_grid{0.0, 0.2, 0.5, 0.8, 1.0};
    double delta = 0.5;
    AngleGridSpec angle_grid;
    ChirpVariant chirp_variant = ChirpVariant::Orthogonal;
    double steer_angle_deg = 0.0;
    std::vector<std::string> solvers{"unfolded", "pgd"};
    PgdConfig pgd;
    TrainConfig train;
    int batch_count = 100;  // evaluation channels per sweep cell
    std::uint64_t seed = 1;
    bool train_if_missing = true;
    TimingSpec timing;

    double p_t() const { return dbm_to_watts(p_t_dbm); }
    double steer_angle() const;
    std::vector<double> angle_grid_radians() const;
    std::vector<double> angle_grid_degrees() const;
};

ExperimentConfig default_config();
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Hash of the canonical JSON form; embedded in CSV provenance headers.
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct SweepRow {
    double rho = 0.0;
    double snr_db = 0.0;
    std::string solver;
    double avg_sum_rate = 0.0;
    double avg_mui = 0.0;
    double avg_beam_mse = 0.0;
    double avg_wall_time = 0.0;  // seconds; kept out of the CSV (not seed-derived)
    double avg_flops = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

struct TradeoffRow {
    double rho = 0.0;
    double snr_db = 0.0;
    std::string solver;
    double avg_sum_rate = 0.0;
    double avg_beam_mse = 0.0;
};

/// Per-angle transmit power, one column per source ("reference" plus one per
/// solver), averaged over the evaluation channels.
struct BeamTable {
    std::vector<double> angles_deg;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> power;  // power[column][angle]
};

struct TimingRow {
    std::string solver;
    Eigen::Index antennas = 0;
    double per_channel_seconds = 0.0;  // median over repetitions
    double flops = 0.0;                // mean over repetitions
};

/// Deterministic store path for the model serving (cfg, rho).
std::filesystem::path model_path(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                                 double rho);

/// Loads the stored model for (cfg, rho), training and saving it first when
/// absent and cfg.train_if_missing allows. Throws MissingModelError otherwise.
UnfoldModel obtain_model(const ExperimentConfig& cfg, double rho,
                         const std::filesystem::path& out_dir);

SweepResult run_rate_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

std::vector<TradeoffRow> run_tradeoff(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_dir);

BeamTable run_beam_pattern(const ExperimentConfig& cfg, double rho,
                           const std::filesystem::path& out_dir);

std::vector<TimingRow> run_timing(const ExperimentConfig& cfg);

/// Designs and evaluates one (rho, snr, solver) cell; one report per channel.
/// model_override, when nonempty, bypasses the model store.
std::vector<EvalReport> run_eval_cell(const ExperimentConfig& cfg, double rho, double snr_db,
                                      const std::string& solver,
                                      const std::filesystem::path& out_dir,
                                      const std::filesystem::path& model_override = {});

// CSV serialization. All writers are atomic (temp file + rename) and start
// with "#" provenance lines carrying the config hash and seed.
void write_rates_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                     const SweepResult& result);
void write_tradeoff_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                        const std::vector<TradeoffRow>& rows);
void write_beam_csv(const std::filesystem::path& path, const ExperimentConfig& cfg, double rho,
                    const BeamTable& table);
void write_timing_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                      const std::vector<TimingRow>& rows);
void write_eval_csv(const std::filesystem::path& path, const ExperimentConfig& cfg, double rho,
                    double snr_db, const std::string& solver,
                    const std::vector<EvalReport>& reports);

/// Formats a double with 9 significant digits, the CSV-wide convention.
std::string format_double(double v);

/// Writes a fully assembled text file atomically.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// CLI entry point (subcommands: train, eval, sweep-rate, beam, tradeoff,
/// timing, gen-config). Separated from main() so tests can drive it.
int run_cli(const std::vector<std::string>& args);

}  // namespace jcaswave
