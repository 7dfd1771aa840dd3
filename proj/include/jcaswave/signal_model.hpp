#pragma once

#include "jcaswave/common.hpp"

namespace jcaswave {

/// Flat-fading downlink channel, one row per user, one column per BS antenna.
struct Channel {
    CMat entries;  // K x N

    Channel() = default;
    explicit Channel(CMat e);

    Eigen::Index users() const { return entries.rows(); }
    Eigen::Index antennas() const { return entries.cols(); }
};

/// Frame of desired unit-power constellation symbols, K users x M snapshots.
struct SymbolFrame {
    CMat entries;  // K x M

    SymbolFrame() = default;
    explicit SymbolFrame(CMat e);

    Eigen::Index users() const { return entries.rows(); }
    Eigen::Index frame_length() const { return entries.cols(); }
};

enum class ChirpVariant { Orthogonal, Directional };

/// Reference radar waveform: constant-modulus chirp snapshots, amplitude
/// sqrt(P_T/N) per entry.
struct BenchmarkWaveform {
    CMat entries;  // N x M
    double p_t = 0.0;
    double steer_angle = 0.0;  // radians; only meaningful for the directional variant
    ChirpVariant variant = ChirpVariant::Orthogonal;

    BenchmarkWaveform() = default;
    BenchmarkWaveform(CMat e, double p_t, double steer_angle, ChirpVariant variant);

    Eigen::Index antennas() const { return entries.rows(); }
    Eigen::Index frame_length() const { return entries.cols(); }
    double entry_amplitude() const { return std::sqrt(p_t / static_cast<double>(antennas())); }
};

/// ULA steering vector, entry n = exp(j*2*pi*n*delta*sin(angle)).
struct SteeringVector {
    double angle = 0.0;  // radians
    double delta = 0.5;  // antenna spacing in wavelengths
    CVec entries;
};

/// Real-valued stacking of one column problem: hbar = [[Re H, -Im H],[Im H, Re H]],
/// vectors stacked as [Re; Im].
struct RealExpansion {
    RMat hbar;   // 2K x 2N
    RVec sbar;   // 2K
    RVec x0bar;  // 2N
};

Channel sample_channel(Eigen::Index k, Eigen::Index n, Rng& rng);

SymbolFrame sample_qpsk_frame(Eigen::Index k, Eigen::Index m, Rng& rng);

BenchmarkWaveform chirp_benchmark(Eigen::Index n, Eigen::Index m, double p_t,
                                  double steer_angle = 0.0, double delta = 0.5,
                                  ChirpVariant variant = ChirpVariant::Orthogonal);

SteeringVector steering_vector(double angle, Eigen::Index n, double delta);

RealExpansion expand_real(const Channel& h, const CVec& s_col, const CVec& x0_col);

/// Stacks a complex vector as [Re; Im].
RVec expand_vector(const CVec& v);

/// Block expansion [[Re H, -Im H],[Im H, Re H]] of a complex matrix.
RMat expand_matrix(const CMat& h);

/// Inverse of expand_vector: entry n = xbar[n] + j*xbar[n+N].
CVec collapse_complex(const RVec& xbar);

}  // namespace jcaswave
