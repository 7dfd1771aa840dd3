#include "jcaswave/signal_model.hpp"

#include <cmath>
#include <numbers>

namespace jcaswave {

namespace {

void require_dims(Eigen::Index k, Eigen::Index n, const char* what) {
    if (k < 1 || n < 1) {
        throw DimensionError(std::string(what) + ": dimensions must be >= 1, got " +
                             std::to_string(k) + "x" + std::to_string(n));
    }
}

}  // namespace

Channel::Channel(CMat e) : entries(std::move(e)) {
    require_dims(entries.rows(), entries.cols(), "Channel");
    if (!entries.allFinite()) {
        throw NumericError("Channel: entries must be finite");
    }
}

SymbolFrame::SymbolFrame(CMat e) : entries(std::move(e)) {
    require_dims(entries.rows(), entries.cols(), "SymbolFrame");
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
        for (Eigen::Index i = 0; i < entries.rows(); ++i) {
            if (std::abs(std::abs(entries(i, j)) - 1.0) > 1e-12) {
                throw ConstraintError("SymbolFrame: entries must have unit modulus");
            }
        }
    }
}

BenchmarkWaveform::BenchmarkWaveform(CMat e, double p_t_, double steer_angle_, ChirpVariant variant_)
    : entries(std::move(e)), p_t(p_t_), steer_angle(steer_angle_), variant(variant_) {
    require_dims(entries.rows(), entries.cols(), "BenchmarkWaveform");
    if (p_t <= 0.0) {
        throw ParameterError("BenchmarkWaveform: p_t must be positive");
    }
    const double amp = entry_amplitude();
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
        for (Eigen::Index i = 0; i < entries.rows(); ++i) {
            if (std::abs(std::abs(entries(i, j)) - amp) > 1e-12 * amp) {
                throw ConstraintError("BenchmarkWaveform: entries must have modulus sqrt(P_T/N)");
            }
        }
    }
}

Channel sample_channel(Eigen::Index k, Eigen::Index n, Rng& rng) {
    require_dims(k, n, "sample_channel");
    // Unit complex variance: real and imaginary parts are each N(0, 1/2).
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    CMat h(k, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < k; ++i) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            h(i, j) = Complex(re, im);
        }
    }
    return Channel(std::move(h));
}

SymbolFrame sample_qpsk_frame(Eigen::Index k, Eigen::Index m, Rng& rng) {
    require_dims(k, m, "sample_qpsk_frame");
    std::uniform_int_distribution<int> pick(0, 3);
    const double a = std::numbers::sqrt2 / 2.0;
    CMat s(k, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < k; ++i) {
            const int q = pick(rng);
            s(i, j) = Complex(q & 1 ? -a : a, q & 2 ? -a : a);
        }
    }
    return SymbolFrame(std::move(s));
}

BenchmarkWaveform chirp_benchmark(Eigen::Index n, Eigen::Index m, double p_t, double steer_angle,
                                  double delta, ChirpVariant variant) {
    require_dims(n, m, "chirp_benchmark");
    if (p_t <= 0.0) {
        throw ParameterError("chirp_benchmark: p_t must be positive");
    }
    if (variant == ChirpVariant::Orthogonal && m < n) {
        throw ConfigError("chirp_benchmark: orthogonal variant needs frame length M >= N "
                          "(row orthogonality unattainable for M < N)");
    }
    const double amp = std::sqrt(p_t / static_cast<double>(n));
    const double md = static_cast<double>(m);
    CMat x0(n, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        const double cd = static_cast<double>(c);
        const double common = std::numbers::pi * cd * cd / md;  // quadratic chirp phase
        for (Eigen::Index a = 0; a < n; ++a) {
            double phase = 2.0 * std::numbers::pi * static_cast<double>(a) * cd / md + common;
            if (variant == ChirpVariant::Directional) {
                phase += 2.0 * std::numbers::pi * static_cast<double>(a) * delta * std::sin(steer_angle);
            }
            x0(a, c) = std::polar(amp, phase);
        }
    }
    return BenchmarkWaveform(std::move(x0), p_t, steer_angle, variant);
}

SteeringVector steering_vector(double angle, Eigen::Index n, double delta) {
    if (n < 1) {
        throw DimensionError("steering_vector: n must be >= 1");
    }
    SteeringVector v;
    v.angle = angle;
    v.delta = delta;
    v.entries.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v.entries(i) = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) * delta * std::sin(angle));
    }
    return v;
}

RVec expand_vector(const CVec& v) {
    RVec out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

RMat expand_matrix(const CMat& h) {
    const Eigen::Index r = h.rows();
    const Eigen::Index c = h.cols();
    RMat out(2 * r, 2 * c);
    out.topLeftCorner(r, c) = h.real();
    out.topRightCorner(r, c) = -h.imag();
    out.bottomLeftCorner(r, c) = h.imag();
    out.bottomRightCorner(r, c) = h.real();
    return out;
}

RealExpansion expand_real(const Channel& h, const CVec& s_col, const CVec& x0_col) {
    if (s_col.size() != h.users() || x0_col.size() != h.antennas()) {
        throw DimensionError("expand_real: column lengths must match channel dimensions");
    }
    RealExpansion e;
    e.hbar = expand_matrix(h.entries);
    e.sbar = expand_vector(s_col);
    e.x0bar = expand_vector(x0_col);
    return e;
}

CVec collapse_complex(const RVec& xbar) {
    if (xbar.size() % 2 != 0) {
        throw DimensionError("collapse_complex: vector length must be even");
    }
    const Eigen::Index n = xbar.size() / 2;
    CVec out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i) = Complex(xbar(i), xbar(i + n));
    }
    return out;
}

}  // namespace jcaswave
