#pragma once

#include "jcaswave/common.hpp"
#include "jcaswave/signal_model.hpp"

#include <optional>
#include <vector>

namespace jcaswave {

/// Transmit waveform, N antennas x M snapshots. In hard mode every entry must
/// have modulus sqrt(P_T/N) within 1e-9 relative; soft mode carries
/// intermediate (infeasible) iterates.
struct Waveform {
    CMat entries;  // N x M
    double p_t = 0.0;
    bool hard = true;

    Waveform() = default;
    Waveform(CMat e, double p_t, bool hard = true);

    static Waveform soft(CMat e, double p_t) { return Waveform(std::move(e), p_t, false); }

    Eigen::Index antennas() const { return entries.rows(); }
    Eigen::Index frame_length() const { return entries.cols(); }
    double entry_amplitude() const { return std::sqrt(p_t / static_cast<double>(antennas())); }
};

/// Transmit power versus detection angle, linear watts per grid point.
struct BeamPattern {
    std::vector<double> angles;  // radians
    std::vector<double> power;   // linear watts
};

/// Per-configuration performance summary.
struct EvalReport {
    double mui_power = 0.0;    // watts
    RVec sinr;                 // per-user linear ratios
    double sum_rate = 0.0;     // bits/s/Hz
    double beam_mse = 0.0;     // linear power squared
    double wall_time = 0.0;    // seconds
    std::uint64_t flops = 0;

    // Network-only extension: same metrics on the pre-projection output.
    std::optional<double> raw_mui_power;
    std::optional<double> raw_beam_mse;
};

double mui_power(const Channel& h, const Waveform& x, const SymbolFrame& s);

/// Per-user empirical average interference power avg_j |h_i^T x_j - s_ij|^2.
RVec per_user_interference(const Channel& h, const Waveform& x, const SymbolFrame& s);

RVec per_user_sinr(const Channel& h, const Waveform& x, const SymbolFrame& s, double n0);

double sum_rate(const RVec& sinr);

std::vector<double> uniform_angle_grid(double min_rad, double max_rad, Eigen::Index points);

BeamPattern beam_pattern(const Waveform& x, const std::vector<double>& grid, double delta);

double beam_mse(const BeamPattern& p, const BeamPattern& p_ref);

}  // namespace jcaswave
