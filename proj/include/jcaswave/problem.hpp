#pragma once

#include "jcaswave/common.hpp"
#include "jcaswave/metrics.hpp"
#include "jcaswave/signal_model.hpp"

#include <memory>
#include <vector>

namespace jcaswave {

/// One frame-design instance of the weighted communications/sensing problem.
struct JcasProblem {
    Channel h;
    SymbolFrame s;
    BenchmarkWaveform x0;
    double rho = 0.5;  // weight on the communications (MUI) term, in [0,1]
    double p_t = 1.0;  // watts

    JcasProblem() = default;
    JcasProblem(Channel h, SymbolFrame s, BenchmarkWaveform x0, double rho, double p_t);

    Eigen::Index users() const { return h.users(); }
    Eigen::Index antennas() const { return h.antennas(); }
    Eigen::Index frame_length() const { return s.frame_length(); }
};

/// Real-valued, per-column, normalized optimization instance. The stacked
/// channel and its Gram matrix are shared (not copied) across the M columns
/// of a frame; hbar_t_sbar is per column.
class RealColumnProblem {
public:
    RealColumnProblem(std::shared_ptr<const RMat> hbar, RVec sbar, RVec x0bar, double rho,
                      double p_t, std::shared_ptr<const RMat> hbar_t_hbar);

    /// Builds a single column problem from complex inputs. x0_col carries the
    /// sqrt(P_T/N) amplitude and is normalized to unit modulus internally.
    static RealColumnProblem from_complex(const Channel& h, const CVec& s_col, const CVec& x0_col,
                                          double rho, double p_t);

    const RMat& hbar() const { return *hbar_; }
    const RVec& sbar() const { return sbar_; }
    const RVec& x0bar() const { return x0bar_; }
    const RVec& hbar_t_sbar() const { return hbar_t_sbar_; }
    const RMat& hbar_t_hbar() const { return *hbar_t_hbar_; }
    double rho() const { return rho_; }
    double p_t() const { return p_t_; }
    Eigen::Index n() const { return x0bar_.size() / 2; }
    /// sqrt(P_T/N), the per-entry amplitude carried outside the unit-modulus variables.
    double scale() const { return std::sqrt(p_t_ / static_cast<double>(n())); }

    std::shared_ptr<const RMat> hbar_ptr() const { return hbar_; }
    std::shared_ptr<const RMat> hbar_t_hbar_ptr() const { return hbar_t_hbar_; }

private:
    std::shared_ptr<const RMat> hbar_;         // 2K x 2N
    RVec sbar_;                                // 2K
    RVec x0bar_;                               // 2N, unit-modulus normalized
    double rho_;
    double p_t_;
    RVec hbar_t_sbar_;                         // 2N
    std::shared_ptr<const RMat> hbar_t_hbar_;  // 2N x 2N, symmetric PSD
};

/// Shared Gram precomputation for a channel: expanded H and symmetrized H^T H.
struct ChannelExpansion {
    std::shared_ptr<const RMat> hbar;
    std::shared_ptr<const RMat> hbar_t_hbar;
};

ChannelExpansion expand_channel(const Channel& h);

std::vector<RealColumnProblem> decompose_columns(const JcasProblem& p);

double objective(const RealColumnProblem& p, const RVec& xbar);

RVec gradient(const RealColumnProblem& p, const RVec& xbar);

/// Nearest unit-modulus point: per complex entry z -> z/|z|, with the
/// degenerate entry z = 0 mapped to 1+0j.
RVec project_cm(const RVec& xbar);

Waveform assemble_waveform(const std::vector<RVec>& columns, double p_t, Eigen::Index n);

}  // namespace jcaswave
