#include "jcaswave/problem.hpp"

#include <cmath>

namespace jcaswave {

JcasProblem::JcasProblem(Channel h_, SymbolFrame s_, BenchmarkWaveform x0_, double rho_, double p_t_)
    : h(std::move(h_)), s(std::move(s_)), x0(std::move(x0_)), rho(rho_), p_t(p_t_) {
    if (rho < 0.0 || rho > 1.0) {
        throw ParameterError("JcasProblem: rho must be in [0, 1]");
    }
    if (p_t <= 0.0) {
        throw ParameterError("JcasProblem: p_t must be positive");
    }
    if (s.users() != h.users() || x0.antennas() != h.antennas() ||
        x0.frame_length() != s.frame_length()) {
        throw DimensionError("JcasProblem: inconsistent dimensions");
    }
}

RealColumnProblem::RealColumnProblem(std::shared_ptr<const RMat> hbar, RVec sbar, RVec x0bar,
                                     double rho, double p_t,
                                     std::shared_ptr<const RMat> hbar_t_hbar)
    : hbar_(std::move(hbar)),
      sbar_(std::move(sbar)),
      x0bar_(std::move(x0bar)),
      rho_(rho),
      p_t_(p_t),
      hbar_t_hbar_(std::move(hbar_t_hbar)) {
    if (rho_ < 0.0 || rho_ > 1.0) {
        throw ParameterError("RealColumnProblem: rho must be in [0, 1]");
    }
    if (p_t_ <= 0.0) {
        throw ParameterError("RealColumnProblem: p_t must be positive");
    }
    if (x0bar_.size() % 2 != 0 || hbar_->cols() != x0bar_.size() ||
        hbar_->rows() != sbar_.size() || hbar_t_hbar_->rows() != x0bar_.size() ||
        hbar_t_hbar_->cols() != x0bar_.size()) {
        throw DimensionError("RealColumnProblem: inconsistent dimensions");
    }
    const CVec x0c = collapse_complex(x0bar_);
    for (Eigen::Index i = 0; i < x0c.size(); ++i) {
        if (std::abs(std::abs(x0c(i)) - 1.0) > 1e-9) {
            throw ConstraintError("RealColumnProblem: x0bar must collapse to unit-modulus entries");
        }
    }
    if ((*hbar_t_hbar_ - hbar_t_hbar_->transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw NumericError("RealColumnProblem: hbar_t_hbar must be symmetric");
    }
    hbar_t_sbar_ = hbar_->transpose() * sbar_;
}

ChannelExpansion expand_channel(const Channel& h) {
    auto hbar = std::make_shared<RMat>(expand_matrix(h.entries));
    RMat gram = hbar->transpose() * (*hbar);
    // Exact symmetry so the gradient and backprop can treat the Gram as
    // self-adjoint without transposes.
    gram = (0.5 * (gram + gram.transpose())).eval();
    return ChannelExpansion{std::move(hbar), std::make_shared<const RMat>(std::move(gram))};
}

RealColumnProblem RealColumnProblem::from_complex(const Channel& h, const CVec& s_col,
                                                  const CVec& x0_col, double rho, double p_t) {
    const ChannelExpansion ce = expand_channel(h);
    const double amp = std::sqrt(p_t / static_cast<double>(h.antennas()));
    return RealColumnProblem(ce.hbar, expand_vector(s_col), expand_vector(x0_col / amp), rho, p_t,
                             ce.hbar_t_hbar);
}

std::vector<RealColumnProblem> decompose_columns(const JcasProblem& p) {
    const ChannelExpansion ce = expand_channel(p.h);
    const double amp = std::sqrt(p.p_t / static_cast<double>(p.antennas()));
    std::vector<RealColumnProblem> columns;
    columns.reserve(p.frame_length());
    for (Eigen::Index m = 0; m < p.frame_length(); ++m) {
        const CVec s_col = p.s.entries.col(m);
        const CVec x0_col = p.x0.entries.col(m) / amp;
        columns.emplace_back(ce.hbar, expand_vector(s_col), expand_vector(x0_col), p.rho, p.p_t,
                             ce.hbar_t_hbar);
    }
    return columns;
}

double objective(const RealColumnProblem& p, const RVec& xbar) {
    if (xbar.size() != 2 * p.n()) {
        throw DimensionError("objective: xbar has wrong length");
    }
    const double c = p.scale();
    const double comm = (c * (p.hbar() * xbar) - p.sbar()).squaredNorm();
    const double sense = (c * (xbar - p.x0bar())).squaredNorm();
    return p.rho() * comm + (1.0 - p.rho()) * sense;
}

RVec gradient(const RealColumnProblem& p, const RVec& xbar) {
    if (xbar.size() != 2 * p.n()) {
        throw DimensionError("gradient: xbar has wrong length");
    }
    const double c2 = p.p_t() / static_cast<double>(p.n());
    const double c = p.scale();
    const double rho = p.rho();
    return 2.0 * rho * c2 * (p.hbar_t_hbar() * xbar) - 2.0 * rho * c * p.hbar_t_sbar() +
           2.0 * (1.0 - rho) * c2 * xbar - 2.0 * (1.0 - rho) * c2 * p.x0bar();
}

RVec project_cm(const RVec& xbar) {
    if (xbar.size() % 2 != 0) {
        throw DimensionError("project_cm: vector length must be even");
    }
    const Eigen::Index n = xbar.size() / 2;
    RVec out(xbar.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = xbar(i);
        const double im = xbar(i + n);
        const double mag = std::hypot(re, im);
        if (mag < 1e-12) {
            out(i) = 1.0;  // phase-0 tie-break for the degenerate entry
            out(i + n) = 0.0;
        } else {
            out(i) = re / mag;
            out(i + n) = im / mag;
        }
    }
    return out;
}

Waveform assemble_waveform(const std::vector<RVec>& columns, double p_t, Eigen::Index n) {
    if (columns.empty()) {
        throw DimensionError("assemble_waveform: no columns");
    }
    const double amp = std::sqrt(p_t / static_cast<double>(n));
    CMat x(n, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t m = 0; m < columns.size(); ++m) {
        if (columns[m].size() != 2 * n) {
            throw DimensionError("assemble_waveform: column " + std::to_string(m) +
                                 " has wrong length");
        }
        const CVec col = collapse_complex(columns[m]);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(std::abs(col(i)) - 1.0) > 1e-9) {
                throw ConstraintError("assemble_waveform: column " + std::to_string(m) +
                                      " violates the constant-modulus constraint");
            }
            x(i, static_cast<Eigen::Index>(m)) = amp * col(i);
        }
    }
    return Waveform(std::move(x), p_t, /*hard=*/true);
}

}  // namespace jcaswave
