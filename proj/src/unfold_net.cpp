#include "jcaswave/unfold_net.hpp"

#include "jcaswave/signal_model.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

namespace jcaswave {

namespace {

void check_layer_sizes(const UnfoldModel& model) {
    const Eigen::Index d = 2 * model.n;
    if (model.n < 1) throw DimensionError("model antenna count must be >= 1");
    if (model.layers.empty()) throw DimensionError("model must have at least one layer");
    for (const UnfoldLayer& layer : model.layers) {
        const RVec* vecs[] = {&layer.w1, &layer.w2, &layer.w3, &layer.w4,
                              &layer.b1, &layer.b2, &layer.b3, &layer.b4};
        for (const RVec* v : vecs) {
            if (v->size() != d) throw DimensionError("layer parameter length mismatch");
            if (!v->allFinite()) throw NumericError("layer parameter not finite");
        }
    }
}

UnfoldLayer zero_layer(Eigen::Index d) {
    UnfoldLayer layer;
    layer.w1 = RVec::Zero(d);
    layer.w2 = RVec::Zero(d);
    layer.w3 = RVec::Zero(d);
    layer.w4 = RVec::Zero(d);
    layer.b1 = RVec::Zero(d);
    layer.b2 = RVec::Zero(d);
    layer.b3 = RVec::Zero(d);
    layer.b4 = RVec::Zero(d);
    return layer;
}

// Applies fn to each of the eight parameter vectors of a layer, paired with
// the matching vector of a second layer-shaped object.
template <typename Fn>
void for_each_param(UnfoldLayer& a, const UnfoldLayer& b, Fn&& fn) {
    fn(a.w1, b.w1);
    fn(a.w2, b.w2);
    fn(a.w3, b.w3);
    fn(a.w4, b.w4);
    fn(a.b1, b.b1);
    fn(a.b2, b.b2);
    fn(a.b3, b.b3);
    fn(a.b4, b.b4);
}

template <typename Fn>
void for_each_param(const UnfoldLayer& a, Fn&& fn) {
    fn(a.w1);
    fn(a.w2);
    fn(a.w3);
    fn(a.w4);
    fn(a.b1);
    fn(a.b2);
    fn(a.b3);
    fn(a.b4);
}

}  // namespace

double activation(double t) {
    if (t <= -0.5) return -1.0;
    if (t >= 0.5) return 1.0;
    return 2.0 * t;
}

RVec activation(const RVec& t) {
    RVec out(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = activation(t[i]);
    return out;
}

double activation_grad(double t) { return std::abs(t) < 0.5 ? 2.0 : 0.0; }

UnfoldModel make_model(Eigen::Index n, Eigen::Index l, double rho, double p_t, WeightInit init,
                       Rng& rng) {
    if (n < 1) throw ParameterError("antenna count must be >= 1");
    if (l < 1) throw ParameterError("layer count must be >= 1");
    if (rho < 0.0 || rho > 1.0) throw ParameterError("rho must lie in [0, 1]");
    if (p_t <= 0.0) throw ParameterError("transmit power must be positive");

    const Eigen::Index d = 2 * n;
    UnfoldModel model;
    model.n = n;
    model.rho = rho;
    model.metadata.rho = rho;
    model.layers.reserve(static_cast<std::size_t>(l));

    if (init == WeightInit::PgdCorrespondence) {
        // Reading the gradient step x - delta*grad f(x) as a weighted sum of
        // the four layer inputs fixes the diagonals below; see the projected
        // gradient update in solvers.cpp.
        const double c2 = p_t / static_cast<double>(n);
        const double delta = 0.05 * static_cast<double>(n) / p_t;
        const double w1 = 2.0 * delta * (1.0 - rho) * c2;
        const double w2 = 2.0 * delta * rho * std::sqrt(c2);
        const double w3 = -2.0 * delta * rho * c2;
        const double w4 = 1.0 - 2.0 * delta * (1.0 - rho) * c2;
        for (Eigen::Index p = 0; p < l; ++p) {
            UnfoldLayer layer = zero_layer(d);
            layer.w1.setConstant(w1);
            layer.w2.setConstant(w2);
            layer.w3.setConstant(w3);
            layer.w4.setConstant(w4);
            model.layers.push_back(std::move(layer));
        }
    } else {
        std::uniform_real_distribution<double> dist(-0.5, 0.5);
        for (Eigen::Index p = 0; p < l; ++p) {
            UnfoldLayer layer = zero_layer(d);
            for (Eigen::Index i = 0; i < d; ++i) {
                layer.w1[i] = dist(rng);
                layer.w2[i] = dist(rng);
                layer.w3[i] = dist(rng);
                layer.w4[i] = dist(rng);
            }
            model.layers.push_back(std::move(layer));
        }
    }
    return model;
}

ForwardTrace forward(const UnfoldModel& model, const RealColumnProblem& p, const RVec& x_init) {
    check_layer_sizes(model);
    if (model.n != p.n()) throw DimensionError("model antenna count does not match problem");
    const Eigen::Index d = 2 * model.n;
    if (x_init.size() != d) throw DimensionError("x_init length must be 2N");

    const RVec& x0 = p.x0bar();
    const RVec& v = p.hbar_t_sbar();
    const RMat& a = p.hbar_t_hbar();

    ForwardTrace trace;
    trace.x_init = x_init;
    trace.pre_activations.reserve(model.layers.size());
    trace.outputs.reserve(model.layers.size());

    RVec x = x_init;
    for (const UnfoldLayer& layer : model.layers) {
        RVec s = layer.w1.cwiseProduct(x0) + layer.b1;
        s += layer.w2.cwiseProduct(v) + layer.b2;
        s += layer.w3.cwiseProduct(a * x) + layer.b3;
        s += layer.w4.cwiseProduct(x) + layer.b4;
        x = activation(s);
        trace.pre_activations.push_back(std::move(s));
        trace.outputs.push_back(x);
    }
    return trace;
}

ForwardTrace forward_instrumented(const UnfoldModel& model, const RealColumnProblem& p,
                                  const RVec& x_init, std::uint64_t& flop_count) {
    check_layer_sizes(model);
    if (model.n != p.n()) throw DimensionError("model antenna count does not match problem");
    const Eigen::Index d = 2 * model.n;
    if (x_init.size() != d) throw DimensionError("x_init length must be 2N");

    const RVec& x0 = p.x0bar();
    const RVec& v = p.hbar_t_sbar();
    const RMat& a = p.hbar_t_hbar();

    ForwardTrace trace;
    trace.x_init = x_init;
    RVec x = x_init;
    for (const UnfoldLayer& layer : model.layers) {
        RVec ax(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            double acc = a(i, 0) * x[0];
            ++flop_count;
            for (Eigen::Index j = 1; j < d; ++j) {
                acc += a(i, j) * x[j];
                flop_count += 2;
            }
            ax[i] = acc;
        }
        RVec s(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            const double m1 = layer.w1[i] * x0[i] + layer.b1[i];
            const double m2 = layer.w2[i] * v[i] + layer.b2[i];
            const double m3 = layer.w3[i] * ax[i] + layer.b3[i];
            const double m4 = layer.w4[i] * x[i] + layer.b4[i];
            flop_count += 8;  // four products, four bias additions
            s[i] = m1 + m2 + m3 + m4;
            flop_count += 3;
        }
        RVec out(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            out[i] = activation(s[i]);
            ++flop_count;
        }
        x = out;
        trace.pre_activations.push_back(std::move(s));
        trace.outputs.push_back(std::move(out));
    }
    return trace;
}

double training_loss(const UnfoldModel& model, const std::vector<RealColumnProblem>& batch) {
    if (batch.empty()) throw ParameterError("training batch must be nonempty");
    const Eigen::Index d = 2 * model.n;
    double total = 0.0;
    for (const RealColumnProblem& p : batch) {
        ForwardTrace trace = forward(model, p, RVec::Zero(d));
        for (const RVec& xhat : trace.outputs) total += objective(p, xhat);
    }
    return total / static_cast<double>(batch.size());
}

ModelGradients backward(const ForwardTrace& trace, const UnfoldModel& model,
                        const RealColumnProblem& p) {
    check_layer_sizes(model);
    const std::size_t l = model.layers.size();
    const Eigen::Index d = 2 * model.n;
    if (model.n != p.n()) throw ConsistencyError("model antenna count does not match problem");
    if (trace.outputs.size() != l || trace.pre_activations.size() != l)
        throw ConsistencyError("trace depth does not match model depth");
    if (trace.x_init.size() != d) throw ConsistencyError("trace x_init length mismatch");
    for (std::size_t i = 0; i < l; ++i) {
        if (trace.outputs[i].size() != d || trace.pre_activations[i].size() != d)
            throw ConsistencyError("trace vector length mismatch");
    }

    const RVec& x0 = p.x0bar();
    const RVec& v = p.hbar_t_sbar();
    const RMat& a = p.hbar_t_hbar();

    ModelGradients grads;
    grads.layers.assign(l, zero_layer(d));

    RVec u_next;  // d(loss)/d(s_{p+1}), empty past the last layer
    for (std::size_t q = l; q-- > 0;) {
        const RVec& xhat = trace.outputs[q];
        const RVec& x_prev = q == 0 ? trace.x_init : trace.outputs[q - 1];
        RVec g = gradient(p, xhat);
        if (u_next.size() != 0) {
            const UnfoldLayer& next = model.layers[q + 1];
            g += a * next.w3.cwiseProduct(u_next) + next.w4.cwiseProduct(u_next);
        }
        RVec u(d);
        for (Eigen::Index i = 0; i < d; ++i)
            u[i] = g[i] * activation_grad(trace.pre_activations[q][i]);

        UnfoldLayer& out = grads.layers[q];
        out.w1 = u.cwiseProduct(x0);
        out.w2 = u.cwiseProduct(v);
        out.w3 = u.cwiseProduct(a * x_prev);
        out.w4 = u.cwiseProduct(x_prev);
        out.b1 = u;
        out.b2 = u;
        out.b3 = u;
        out.b4 = u;
        u_next = std::move(u);
    }
    return grads;
}

std::pair<double, ModelGradients> loss_and_gradients(const UnfoldModel& model,
                                                     const std::vector<RealColumnProblem>& batch) {
    if (batch.empty()) throw ParameterError("training batch must be nonempty");
    const Eigen::Index d = 2 * model.n;
    const std::size_t l = model.layers.size();

    double total = 0.0;
    ModelGradients acc;
    acc.layers.assign(l, zero_layer(d));
    for (const RealColumnProblem& p : batch) {
        ForwardTrace trace = forward(model, p, RVec::Zero(d));
        for (const RVec& xhat : trace.outputs) total += objective(p, xhat);
        ModelGradients g = backward(trace, model, p);
        for (std::size_t q = 0; q < l; ++q)
            for_each_param(acc.layers[q], g.layers[q],
                           [](RVec& dst, const RVec& src) { dst += src; });
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    total *= inv;
    for (std::size_t q = 0; q < l; ++q)
        for_each_param(acc.layers[q], acc.layers[q],
                       [inv](RVec& dst, const RVec&) { dst *= inv; });
    return {total, std::move(acc)};
}

RealColumnProblem sample_column_problem(const TrainScenario& scenario, double rho,
                                        const BenchmarkWaveform& x0, Rng& rng) {
    Channel h = sample_channel(scenario.k, scenario.n, rng);
    SymbolFrame s = sample_qpsk_frame(scenario.k, 1, rng);
    std::uniform_int_distribution<Eigen::Index> pick(0, x0.frame_length() - 1);
    const Eigen::Index col = pick(rng);
    return RealColumnProblem::from_complex(h, s.entries.col(0), x0.entries.col(col), rho,
                                           scenario.p_t);
}

std::vector<RealColumnProblem> sample_batch(const TrainScenario& scenario, double rho, int count,
                                            Rng& rng) {
    if (count < 1) throw ParameterError("batch size must be >= 1");
    BenchmarkWaveform x0 = chirp_benchmark(scenario.n, scenario.m, scenario.p_t,
                                           scenario.steer_angle, scenario.delta,
                                           scenario.chirp_variant);
    std::vector<RealColumnProblem> batch;
    batch.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) batch.push_back(sample_column_problem(scenario, rho, x0, rng));
    return batch;
}

double validation_objective(const UnfoldModel& model,
                            const std::vector<RealColumnProblem>& batch) {
    if (batch.empty()) throw ParameterError("validation batch must be non-empty");
    const Eigen::Index d = 2 * model.n;
    double sum = 0.0;
    for (const RealColumnProblem& p : batch) {
        ForwardTrace trace = forward(model, p, RVec::Zero(d));
        sum += objective(p, project_cm(trace.outputs.back()));
    }
    return sum / static_cast<double>(batch.size());
}

namespace {

/// One optimization run from a specific seed; train() wraps this in the
/// restart/selection loop.
UnfoldModel train_single(const TrainConfig& cfg, const TrainScenario& scenario, double rho,
                         const TrainObserver& observer, std::uint64_t run_seed) {
    Rng init_rng(derive_seed(run_seed, "unfold-init"));
    UnfoldModel model = make_model(scenario.n, scenario.l, rho, scenario.p_t, cfg.init, init_rng);
    model.metadata.seed = cfg.seed;
    model.metadata.learning_rate = cfg.learning_rate;
    model.metadata.decay = cfg.decay;
    model.metadata.batch_size = static_cast<std::uint32_t>(cfg.batch_size);
    model.metadata.steps = static_cast<std::uint32_t>(cfg.steps);

    BenchmarkWaveform x0 = chirp_benchmark(scenario.n, scenario.m, scenario.p_t,
                                           scenario.steer_angle, scenario.delta,
                                           scenario.chirp_variant);
    Rng rng(derive_seed(run_seed, "unfold-batches"));

    const std::size_t l = model.layers.size();
    const Eigen::Index d = 2 * model.n;
    std::vector<UnfoldLayer> adam_m(l, zero_layer(d));
    std::vector<UnfoldLayer> adam_v(l, zero_layer(d));
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;

    double last_loss = 0.0;
    for (int step = 1; step <= cfg.steps; ++step) {
        std::vector<RealColumnProblem> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch_size));
        for (int i = 0; i < cfg.batch_size; ++i)
            batch.push_back(sample_column_problem(scenario, rho, x0, rng));

        auto [loss, grads] = loss_and_gradients(model, batch);
        if (!std::isfinite(loss)) throw TrainingError("training loss diverged", step);
        last_loss = loss;

        if (cfg.grad_clip_norm > 0.0) {
            double sq = 0.0;
            for (const UnfoldLayer& layer : grads.layers)
                for_each_param(layer, [&sq](const RVec& g) { sq += g.squaredNorm(); });
            const double norm = std::sqrt(sq);
            if (!std::isfinite(norm)) throw TrainingError("gradient diverged", step);
            if (norm > cfg.grad_clip_norm) {
                const double scale = cfg.grad_clip_norm / norm;
                for (UnfoldLayer& layer : grads.layers)
                    for_each_param(layer, layer, [scale](RVec& g, const RVec&) { g *= scale; });
            }
        }

        const double lr = cfg.learning_rate *
                          std::pow(cfg.decay, static_cast<double>((step - 1) / cfg.decay_every));
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        for (std::size_t q = 0; q < l; ++q) {
            RVec* params[] = {&model.layers[q].w1, &model.layers[q].w2, &model.layers[q].w3,
                              &model.layers[q].w4, &model.layers[q].b1, &model.layers[q].b2,
                              &model.layers[q].b3, &model.layers[q].b4};
            const RVec* gs[] = {&grads.layers[q].w1, &grads.layers[q].w2, &grads.layers[q].w3,
                                &grads.layers[q].w4, &grads.layers[q].b1, &grads.layers[q].b2,
                                &grads.layers[q].b3, &grads.layers[q].b4};
            RVec* ms[] = {&adam_m[q].w1, &adam_m[q].w2, &adam_m[q].w3, &adam_m[q].w4,
                          &adam_m[q].b1, &adam_m[q].b2, &adam_m[q].b3, &adam_m[q].b4};
            RVec* vs[] = {&adam_v[q].w1, &adam_v[q].w2, &adam_v[q].w3, &adam_v[q].w4,
                          &adam_v[q].b1, &adam_v[q].b2, &adam_v[q].b3, &adam_v[q].b4};
            for (int t = 0; t < 8; ++t) {
                RVec& th = *params[t];
                const RVec& g = *gs[t];
                RVec& m = *ms[t];
                RVec& w = *vs[t];
                m = kBeta1 * m + (1.0 - kBeta1) * g;
                w = kBeta2 * w + (1.0 - kBeta2) * g.cwiseProduct(g);
                for (Eigen::Index i = 0; i < d; ++i) {
                    const double mhat = m[i] / bc1;
                    const double vhat = w[i] / bc2;
                    th[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
                }
            }
        }
        if (observer) observer(step, lr, loss, model);
    }
    model.metadata.final_train_loss = last_loss;
    return model;
}

}  // namespace

UnfoldModel train(const TrainConfig& cfg, const TrainScenario& scenario, double rho,
                  const TrainObserver& observer) {
    if (cfg.learning_rate <= 0.0) throw ParameterError("learning rate must be positive");
    if (cfg.decay <= 0.0 || cfg.decay > 1.0) throw ParameterError("decay must lie in (0, 1]");
    if (cfg.decay_every < 1) throw ParameterError("decay cadence must be >= 1");
    if (cfg.batch_size < 1) throw ParameterError("batch size must be >= 1");
    if (cfg.steps < 0) throw ParameterError("step count must be >= 0");
    if (cfg.restarts < 1) throw ParameterError("restart count must be >= 1");
    if (rho < 0.0 || rho > 1.0) throw ParameterError("rho must lie in [0, 1]");

    if (cfg.restarts == 1) return train_single(cfg, scenario, rho, observer, cfg.seed);

    // Fixed validation batch shared by all candidates so selection is a pure
    // function of the config.
    Rng val_rng(derive_seed(cfg.seed, "unfold-restart-val"));
    const std::vector<RealColumnProblem> val = sample_batch(scenario, rho, 200, val_rng);

    UnfoldModel best;
    double best_score = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        const std::uint64_t run_seed =
            r == 0 ? cfg.seed : derive_seed(cfg.seed, "unfold-restart", static_cast<std::uint64_t>(r));
        UnfoldModel candidate = train_single(cfg, scenario, rho, observer, run_seed);
        const double score = validation_objective(candidate, val);
        if (score < best_score) {
            best_score = score;
            best = std::move(candidate);
        }
    }
    best.metadata.seed = cfg.seed;
    return best;
}

std::pair<Waveform, EvalReport> infer_waveform(const UnfoldModel& model, const JcasProblem& p,
                                               const EvalContext& ctx) {
    check_layer_sizes(model);
    if (model.n != p.antennas()) throw DimensionError("model antenna count does not match problem");

    const Eigen::Index n = p.antennas();
    const Eigen::Index m = p.frame_length();
    const Eigen::Index d = 2 * n;
    const double amp = std::sqrt(p.p_t / static_cast<double>(n));

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RealColumnProblem> columns = decompose_columns(p);
    std::vector<RVec> projected;
    projected.reserve(columns.size());
    CMat raw(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        ForwardTrace trace = forward(model, columns[static_cast<std::size_t>(j)], RVec::Zero(d));
        const RVec& last = trace.outputs.back();
        raw.col(j) = amp * collapse_complex(last);
        projected.push_back(project_cm(last));
    }
    Waveform x = assemble_waveform(projected, p.p_t, n);
    const auto t1 = std::chrono::steady_clock::now();

    EvalReport report;
    report.wall_time = std::chrono::duration<double>(t1 - t0).count();
    report.flops = static_cast<std::uint64_t>(m) *
                   (static_cast<std::uint64_t>(model.depth()) * flops_per_layer(n) +
                    projection_flops(n));
    report.mui_power = mui_power(p.h, x, p.s);
    report.sinr = per_user_sinr(p.h, x, p.s, ctx.n0);
    report.sum_rate = sum_rate(report.sinr);
    report.beam_mse = beam_mse(beam_pattern(x, ctx.angle_grid, ctx.delta), ctx.reference);

    Waveform soft = Waveform::soft(raw, p.p_t);
    report.raw_mui_power = mui_power(p.h, soft, p.s);
    report.raw_beam_mse = beam_mse(beam_pattern(soft, ctx.angle_grid, ctx.delta), ctx.reference);
    return {std::move(x), report};
}

std::uint64_t flops_per_layer(Eigen::Index n) {
    if (n < 1) throw ParameterError("antenna count must be >= 1");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    return 2 * un * (4 * un + 11);
}

std::uint64_t projection_flops(Eigen::Index n) {
    if (n < 1) throw ParameterError("antenna count must be >= 1");
    return 6 * static_cast<std::uint64_t>(n);
}

// ---------------------------------------------------------------------------
// Model file format (little-endian binary):
//   bytes 0..7   magic "UNFWNET1"
//   u32 format_version, u32 n, u32 layers, u32 reserved (0)
//   f64 rho, u64 seed, f64 learning_rate, f64 decay
//   u32 batch_size, u32 steps, f64 final_train_loss
//   layers x 8 vectors (w1,b1,w2,b2,w3,b3,w4,b4), each 2n f64
//   u64 fnv1a-64 checksum of all preceding bytes
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'U', 'N', 'F', 'W', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw ModelIoError("model file truncated");
    T value;
    std::memcpy(&value, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

void put_vec(std::string& out, const RVec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v[i]);
}

RVec take_vec(const std::string& in, std::size_t& pos, Eigen::Index d) {
    RVec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = take<double>(in, pos);
    return v;
}

std::string serialize_model(const UnfoldModel& model) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.n));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.layers.size()));
    put<std::uint32_t>(out, 0);
    put<double>(out, model.rho);
    put<std::uint64_t>(out, model.metadata.seed);
    put<double>(out, model.metadata.learning_rate);
    put<double>(out, model.metadata.decay);
    put<std::uint32_t>(out, model.metadata.batch_size);
    put<std::uint32_t>(out, model.metadata.steps);
    put<double>(out, model.metadata.final_train_loss);
    for (const UnfoldLayer& layer : model.layers) {
        put_vec(out, layer.w1);
        put_vec(out, layer.b1);
        put_vec(out, layer.w2);
        put_vec(out, layer.b2);
        put_vec(out, layer.w3);
        put_vec(out, layer.b3);
        put_vec(out, layer.w4);
        put_vec(out, layer.b4);
    }
    put<std::uint64_t>(out, fnv1a64(out));
    return out;
}

}  // namespace

void save_model(const UnfoldModel& model, const std::filesystem::path& path) {
    check_layer_sizes(model);
    const std::string bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelIoError("cannot open model file for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw ModelIoError("failed writing model file: " + path.string());
}

UnfoldModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelIoError("cannot open model file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();

    std::size_t pos = 0;
    if (bytes.size() < sizeof(kMagic) + sizeof(std::uint64_t))
        throw ModelIoError("model file truncated");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw ModelIoError("not a model file (bad magic)");
    pos = sizeof(kMagic);

    const std::uint64_t stored_sum =
        [&bytes] {
            std::size_t tail = bytes.size() - sizeof(std::uint64_t);
            std::uint64_t s;
            std::memcpy(&s, bytes.data() + tail, sizeof(s));
            return s;
        }();
    const std::uint64_t computed =
        fnv1a64(std::string_view(bytes.data(), bytes.size() - sizeof(std::uint64_t)));
    if (stored_sum != computed) throw ModelIoError("model file corrupt (checksum mismatch)");

    UnfoldModel model;
    const std::uint32_t version = take<std::uint32_t>(bytes, pos);
    if (version != kFormatVersion)
        throw ModelIoError("unsupported model format version " + std::to_string(version));
    model.metadata.format_version = version;
    const std::uint32_t n = take<std::uint32_t>(bytes, pos);
    const std::uint32_t l = take<std::uint32_t>(bytes, pos);
    take<std::uint32_t>(bytes, pos);  // reserved
    if (n < 1 || l < 1) throw ModelIoError("model file has invalid dimensions");
    model.n = static_cast<Eigen::Index>(n);
    model.rho = take<double>(bytes, pos);
    model.metadata.rho = model.rho;
    model.metadata.seed = take<std::uint64_t>(bytes, pos);
    model.metadata.learning_rate = take<double>(bytes, pos);
    model.metadata.decay = take<double>(bytes, pos);
    model.metadata.batch_size = take<std::uint32_t>(bytes, pos);
    model.metadata.steps = take<std::uint32_t>(bytes, pos);
    model.metadata.final_train_loss = take<double>(bytes, pos);

    const Eigen::Index d = 2 * static_cast<Eigen::Index>(n);
    const std::size_t body_end = bytes.size() - sizeof(std::uint64_t);
    const std::size_t need = pos + static_cast<std::size_t>(l) * 8u *
                                       static_cast<std::size_t>(d) * sizeof(double);
    if (need > body_end) throw ModelIoError("model file truncated");
    if (need < body_end) throw ModelIoError("model file has trailing data");
    for (std::uint32_t q = 0; q < l; ++q) {
        UnfoldLayer layer;
        layer.w1 = take_vec(bytes, pos, d);
        layer.b1 = take_vec(bytes, pos, d);
        layer.w2 = take_vec(bytes, pos, d);
        layer.b2 = take_vec(bytes, pos, d);
        layer.w3 = take_vec(bytes, pos, d);
        layer.b3 = take_vec(bytes, pos, d);
        layer.w4 = take_vec(bytes, pos, d);
        layer.b4 = take_vec(bytes, pos, d);
        model.layers.push_back(std::move(layer));
    }
    check_layer_sizes(model);
    return model;
}

}  // namespace jcaswave
