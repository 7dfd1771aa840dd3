#include "jcaswave/metrics.hpp"

#include <cmath>

namespace jcaswave {

Waveform::Waveform(CMat e, double p_t_, bool hard_) : entries(std::move(e)), p_t(p_t_), hard(hard_) {
    if (entries.rows() < 1 || entries.cols() < 1) {
        throw DimensionError("Waveform: dimensions must be >= 1");
    }
    if (p_t <= 0.0) {
        throw ParameterError("Waveform: p_t must be positive");
    }
    if (hard) {
        const double amp = entry_amplitude();
        for (Eigen::Index j = 0; j < entries.cols(); ++j) {
            for (Eigen::Index i = 0; i < entries.rows(); ++i) {
                if (std::abs(std::abs(entries(i, j)) - amp) > 1e-9 * amp) {
                    throw ConstraintError("Waveform: entry modulus must equal sqrt(P_T/N)");
                }
            }
        }
    }
}

namespace {

void require_consistent(const Channel& h, const Waveform& x, const SymbolFrame& s) {
    if (h.antennas() != x.antennas() || h.users() != s.users() ||
        x.frame_length() != s.frame_length()) {
        throw DimensionError("metrics: channel " + std::to_string(h.users()) + "x" +
                             std::to_string(h.antennas()) + ", waveform " +
                             std::to_string(x.antennas()) + "x" + std::to_string(x.frame_length()) +
                             ", symbols " + std::to_string(s.users()) + "x" +
                             std::to_string(s.frame_length()) + " are inconsistent");
    }
}

}  // namespace

double mui_power(const Channel& h, const Waveform& x, const SymbolFrame& s) {
    require_consistent(h, x, s);
    return (h.entries * x.entries - s.entries).squaredNorm();
}

RVec per_user_interference(const Channel& h, const Waveform& x, const SymbolFrame& s) {
    require_consistent(h, x, s);
    const CMat residual = h.entries * x.entries - s.entries;
    return residual.cwiseAbs2().rowwise().mean();
}

RVec per_user_sinr(const Channel& h, const Waveform& x, const SymbolFrame& s, double n0) {
    if (n0 <= 0.0) {
        throw ParameterError("per_user_sinr: noise power must be positive");
    }
    const RVec interference = per_user_interference(h, x, s);
    const RVec signal = s.entries.cwiseAbs2().rowwise().mean();
    return signal.array() / (interference.array() + n0);
}

double sum_rate(const RVec& sinr) {
    double rate = 0.0;
    for (Eigen::Index i = 0; i < sinr.size(); ++i) {
        if (sinr(i) < 0.0) {
            throw ParameterError("sum_rate: SINR must be nonnegative");
        }
        rate += std::log2(1.0 + sinr(i));
    }
    return rate;
}

std::vector<double> uniform_angle_grid(double min_rad, double max_rad, Eigen::Index points) {
    if (points < 1 || max_rad < min_rad) {
        throw ParameterError("uniform_angle_grid: invalid grid");
    }
    std::vector<double> grid(points);
    if (points == 1) {
        grid[0] = min_rad;
        return grid;
    }
    const double step = (max_rad - min_rad) / static_cast<double>(points - 1);
    for (Eigen::Index i = 0; i < points; ++i) {
        grid[i] = min_rad + step * static_cast<double>(i);
    }
    return grid;
}

BeamPattern beam_pattern(const Waveform& x, const std::vector<double>& grid, double delta) {
    if (grid.empty()) {
        throw ParameterError("beam_pattern: angle grid must be nonempty");
    }
    const double m = static_cast<double>(x.frame_length());
    const CMat cov = (x.entries * x.entries.adjoint()) / m;  // (1/M) X X^H
    BeamPattern p;
    p.angles = grid;
    p.power.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const CVec a = steering_vector(grid[g], x.antennas(), delta).entries;
        const Complex q = a.dot(cov * a);  // a^H cov a
        const double tol = 1e-9 * std::max(1.0, std::abs(q.real()));
        if (std::abs(q.imag()) > tol) {
            throw NumericError("beam_pattern: quadratic form has non-real value (covariance broken)");
        }
        p.power[g] = std::max(0.0, q.real());
    }
    return p;
}

double beam_mse(const BeamPattern& p, const BeamPattern& p_ref) {
    if (p.angles.size() != p_ref.angles.size()) {
        throw DimensionError("beam_mse: angle grids differ in size");
    }
    for (std::size_t i = 0; i < p.angles.size(); ++i) {
        if (p.angles[i] != p_ref.angles[i]) {
            throw DimensionError("beam_mse: angle grids differ");
        }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.power.size(); ++i) {
        const double d = p.power[i] - p_ref.power[i];
        acc += d * d;
    }
    return acc / static_cast<double>(p.power.size());
}

}  // namespace jcaswave
