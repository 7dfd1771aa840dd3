#pragma once

#include "jcaswave/metrics.hpp"
#include "jcaswave/problem.hpp"
#include "jcaswave/solvers.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace jcaswave {

/// One unfolded layer. The sparse connectivity makes every weight matrix
/// diagonal, so each is stored as its length-2N diagonal.
struct UnfoldLayer {
    RVec w1, w2, w3, w4;  // diagonals acting on x0bar, Hbar^T sbar, Gram*x, x
    RVec b1, b2, b3, b4;
};

enum class WeightInit { PgdCorrespondence, Random };

struct ModelMetadata {
    std::uint32_t format_version = 1;
    double rho = 0.0;
    std::uint64_t seed = 0;
    double learning_rate = 1e-4;
    double decay = 0.97;
    std::uint32_t batch_size = 100;
    std::uint32_t steps = 0;
    double final_train_loss = 0.0;
};

struct UnfoldModel {
    std::vector<UnfoldLayer> layers;
    Eigen::Index n = 0;  // antenna count the model was built for
    double rho = 0.0;
    ModelMetadata metadata;

    Eigen::Index depth() const { return static_cast<Eigen::Index>(layers.size()); }
};

struct TrainConfig {
    double learning_rate = 1e-4;
    double decay = 0.97;     // multiplicative learning-rate factor
    int decay_every = 100;   // steps between decay applications
    int batch_size = 100;
    int steps = 3000;
    std::uint64_t seed = 0;
    WeightInit init = WeightInit::PgdCorrespondence;
    double grad_clip_norm = 10.0;  // global-norm clip; <= 0 disables
    // Independent training runs from derived seeds; the candidate with the
    // lowest validation_objective on a fixed validation batch is kept. The
    // loss landscape has saturation-induced local minima (dead activation
    // gradients), so single runs are basin lotteries; restarts play the same
    // role as the descent solver's multistart. 1 = single run, bit-identical
    // to prior behaviour.
    int restarts = 1;
};

/// Scenario a model is trained for: dimensions plus the benchmark waveform
/// that supplies the per-sample x0 columns.
struct TrainScenario {
    Eigen::Index n = 8;
    Eigen::Index k = 4;
    Eigen::Index m = 20;  // chirp frame length the x0 columns are drawn from
    Eigen::Index l = 10;  // network depth
    double p_t = 1.0;
    ChirpVariant chirp_variant = ChirpVariant::Orthogonal;
    double steer_angle = 0.0;
    double delta = 0.5;
};

/// Per-layer pre-activations and outputs of one forward pass.
struct ForwardTrace {
    RVec x_init;
    std::vector<RVec> pre_activations;  // s_p
    std::vector<RVec> outputs;          // xhat_p = psi(s_p)
};

/// Gradients for all 8L parameter vectors, same layout as the model layers.
struct ModelGradients {
    std::vector<UnfoldLayer> layers;
};

/// Clipped-linear activation: -1 below -0.5, slope 2 on [-0.5, 0.5], 1 above.
double activation(double t);
RVec activation(const RVec& t);

/// Activation subgradient: 2 on |t| < 0.5, 0 on |t| >= 0.5 (kinks included).
double activation_grad(double t);

UnfoldModel make_model(Eigen::Index n, Eigen::Index l, double rho, double p_t, WeightInit init,
                       Rng& rng);

ForwardTrace forward(const UnfoldModel& model, const RealColumnProblem& p, const RVec& x_init);

/// Forward pass with hand-rolled arithmetic and an operation counter; used to
/// audit the per-layer FLOP model. Produces the same trace as forward().
ForwardTrace forward_instrumented(const UnfoldModel& model, const RealColumnProblem& p,
                                  const RVec& x_init, std::uint64_t& flop_count);

double training_loss(const UnfoldModel& model, const std::vector<RealColumnProblem>& batch);

/// Reverse-mode gradients of the all-layer loss for one sample.
ModelGradients backward(const ForwardTrace& trace, const UnfoldModel& model,
                        const RealColumnProblem& p);

/// Mean loss and mean gradients over a batch.
std::pair<double, ModelGradients> loss_and_gradients(const UnfoldModel& model,
                                                     const std::vector<RealColumnProblem>& batch);

/// Mean design objective of the delivered waveform (the projected final-layer
/// output) over a batch. The all-layer loss drives optimization; this scores
/// the finished model, and restart selection minimizes it.
double validation_objective(const UnfoldModel& model,
                            const std::vector<RealColumnProblem>& batch);

/// Optional per-step observer: (step index, learning rate, batch loss, model
/// after the step's update). Supports loss probes on fixed evaluation batches.
/// With restarts > 1 it fires for every candidate run, the step index
/// restarting at 1 for each.
using TrainObserver = std::function<void(int, double, double, const UnfoldModel&)>;

UnfoldModel train(const TrainConfig& cfg, const TrainScenario& scenario, double rho,
                  const TrainObserver& observer = nullptr);

/// Draws one training/held-out sample: fresh channel, one QPSK column, one
/// column of the scenario's benchmark waveform.
RealColumnProblem sample_column_problem(const TrainScenario& scenario, double rho,
                                        const BenchmarkWaveform& x0, Rng& rng);

std::vector<RealColumnProblem> sample_batch(const TrainScenario& scenario, double rho, int count,
                                            Rng& rng);

std::pair<Waveform, EvalReport> infer_waveform(const UnfoldModel& model, const JcasProblem& p,
                                               const EvalContext& ctx);

/// Arithmetic operations per layer: 2N(4N+11), itemized as the Gram matvec
/// 2N(4N-1), elementwise weight products 8N, bias additions 8N, the four-way
/// sum 6N, and the activation 2N.
std::uint64_t flops_per_layer(Eigen::Index n);

/// Operations in one constant-modulus projection of a length-2N vector.
std::uint64_t projection_flops(Eigen::Index n);

void save_model(const UnfoldModel& model, const std::filesystem::path& path);
UnfoldModel load_model(const std::filesystem::path& path);

}  // namespace jcaswave
