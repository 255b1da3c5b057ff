#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svad/common.hpp"
#include "svad/encoding.hpp"
#include "svad/matrix.hpp"

namespace svad {

inline constexpr double kThreshold = 1.0;
inline constexpr double kSurrogateLambda = 10.0;
inline constexpr double kDefaultTauMem = 10.0;
inline constexpr double kDefaultTauSyn = 5.0;

// Derivative of the fast sigmoid, the stand-in for dS/dV in the backward pass.
inline double surrogate_grad(double v, double theta = kThreshold,
                             double lambda = kSurrogateLambda) {
  const double d = 1.0 + lambda * std::abs(v - theta);
  return 1.0 / (d * d);
}

// Fast sigmoid itself; hidden activation in the test-only smoothed mode.
inline double fast_sigmoid(double x, double lambda = kSurrogateLambda) {
  return x / (1.0 + lambda * std::abs(x));
}

// Hidden units fire hard Heaviside spikes; the smoothed mode replaces them
// with the fast sigmoid so BPTT can be validated against finite differences.
enum class ActivationMode { kHard, kSmoothed };

struct LifLayerParams {
  Matrix weights;  // n_pre x n_post
  double tau_mem = kDefaultTauMem;
  double tau_syn = kDefaultTauSyn;
  double alpha = 0.0;  // exp(-dt / tau_mem)
  double beta = 0.0;   // exp(-dt / tau_syn)
  double theta = kThreshold;
  bool is_readout = false;

  std::size_t n_pre() const { return weights.rows(); }
  std::size_t n_post() const { return weights.cols(); }
};

inline LifLayerParams make_layer(std::size_t n_pre, std::size_t n_post,
                                 double tau_mem = kDefaultTauMem,
                                 double tau_syn = kDefaultTauSyn,
                                 bool is_readout = false, double delta_t = 1.0) {
  LifLayerParams p;
  p.weights = Matrix(n_pre, n_post);
  p.tau_mem = tau_mem;
  p.tau_syn = tau_syn;
  p.alpha = std::exp(-delta_t / tau_mem);
  p.beta = std::exp(-delta_t / tau_syn);
  p.is_readout = is_readout;
  if (!(p.alpha > 0.0 && p.alpha < 1.0) || !(p.beta > 0.0 && p.beta < 1.0)) {
    throw ValidationError("decay constants must lie in (0,1); check tau values");
  }
  return p;
}

struct NetworkModel {
  std::vector<LifLayerParams> layers;
  std::size_t t_total = 100;
  double delta_t = 1.0;
  double surrogate_lambda = kSurrogateLambda;
  std::size_t readout_window = 0;  // 0 means the full simulation range
  std::uint64_t seed = 0;

  std::size_t n_inputs() const { return layers.front().n_pre(); }
  std::size_t n_outputs() const { return layers.back().n_post(); }
  std::size_t eval_window() const { return readout_window == 0 ? t_total : readout_window; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const LifLayerParams& l : layers) n += l.weights.size();
    return n;
  }

  void validate() const {
    if (layers.empty()) throw ValidationError("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const LifLayerParams& l = layers[i];
      if (l.theta != kThreshold) throw ValidationError("threshold must be 1");
      if (l.is_readout != (i + 1 == layers.size())) {
        throw ValidationError("exactly the final layer must be the readout");
      }
      if (i + 1 < layers.size() && l.n_post() != layers[i + 1].n_pre()) {
        throw ValidationError("layer width mismatch between layers " +
                              std::to_string(i) + " and " + std::to_string(i + 1));
      }
    }
    if (layers.back().n_post() != 2) {
      throw ValidationError("readout must have 2 neurons (no-speech, speech)");
    }
    if (t_total == 0) throw ValidationError("t_total must be positive");
    if (eval_window() > t_total) throw ValidationError("readout window exceeds t_total");
    if (delta_t != 1.0) throw ValidationError("delta_t is fixed at 1");
    if (surrogate_lambda != kSurrogateLambda) {
      throw ValidationError("surrogate steepness is fixed at 10");
    }
  }
};

// Zero-mean Gaussian init, std 1/sqrt(n_pre) per layer; the stream position
// depends only on the seed, so the exact init vector can be rewound later.
inline void init_weights(NetworkModel& model, std::uint64_t seed) {
  Rng rng(seed);
  model.seed = seed;
  for (LifLayerParams& layer : model.layers) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(layer.n_pre()));
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
      layer.weights[i] = stddev * rng.gaussian();
    }
  }
}

struct LayerSpec {
  std::size_t width;
  double tau_mem = kDefaultTauMem;
  double tau_syn = kDefaultTauSyn;
};

inline NetworkModel make_network(std::size_t n_inputs, std::vector<LayerSpec> layer_specs,
                                 std::size_t t_total, std::size_t readout_window,
                                 std::uint64_t seed) {
  NetworkModel model;
  model.t_total = t_total;
  model.readout_window = readout_window;
  std::size_t prev = n_inputs;
  for (std::size_t i = 0; i < layer_specs.size(); ++i) {
    const bool readout = i + 1 == layer_specs.size();
    model.layers.push_back(make_layer(prev, layer_specs[i].width, layer_specs[i].tau_mem,
                                      layer_specs[i].tau_syn, readout));
    prev = layer_specs[i].width;
  }
  init_weights(model, seed);
  model.validate();
  return model;
}

// 128-200-2, tau_mem 10, tau_syn 5, one 100-step frame per decision.
inline NetworkModel make_h1(std::uint64_t seed, std::size_t hidden = 200,
                            std::size_t t_frame = 100) {
  NetworkModel m = make_network(kNumMelFilters, {{hidden}, {2}}, t_frame, 0, seed);
  if (hidden == 200 && m.param_count() != 26000) {
    throw std::logic_error("h1 must have exactly 26000 weights");
  }
  return m;
}

// 128-100-15-2; the 15-neuron layer carries the long memory (tau_mem 300);
// fed 5 frames (500 steps) and read out while the last frame is presented.
inline NetworkModel make_h2(std::uint64_t seed, std::size_t t_frame = 100) {
  NetworkModel m = make_network(
      kNumMelFilters, {{100, 10.0, 5.0}, {15, 300.0, 5.0}, {2, 10.0, 5.0}},
      kSequenceFrames * t_frame, t_frame, seed);
  if (m.param_count() != 14330) {
    throw std::logic_error("h2 must have exactly 14330 weights");
  }
  return m;
}

// --- forward simulation -----------------------------------------------------

namespace detail {

// One state update for one layer. Evaluation order is fixed: the spike is
// computed from the pre-update voltage, the voltage update consumes the
// pre-update current and subtracts the spike emitted this step.
//   S(t) = act(V(t) - theta)
//   V(t+1) = alpha*V(t) + I(t) - reset(t)     (readout: no spike, no reset)
//   I(t+1) = beta*I(t) + W^T x(t)             (input accumulated separately)
inline void step_state(const LifLayerParams& p, ActivationMode mode, double lambda,
                       std::span<double> v, std::span<double> cur,
                       std::span<double> spikes_out, const double* frozen_reset) {
  const std::size_t n = v.size();
  if (p.is_readout) {
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = p.alpha * v[i] + cur[i];
      cur[i] = p.beta * cur[i];
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double s = mode == ActivationMode::kHard
                         ? (v[i] >= p.theta ? 1.0 : 0.0)
                         : fast_sigmoid(v[i] - p.theta, lambda);
    spikes_out[i] = s;
    const double reset = frozen_reset != nullptr ? frozen_reset[i] : s;
    v[i] = p.alpha * v[i] + cur[i] - reset;
    cur[i] = p.beta * cur[i];
  }
}

template <class X>
inline void accumulate_current(const LifLayerParams& p, const X* x, std::span<double> cur) {
  const std::size_t n_pre = p.n_pre();
  const std::size_t n_post = p.n_post();
  for (std::size_t j = 0; j < n_pre; ++j) {
    const double xj = static_cast<double>(x[j]);
    if (xj == 0.0) continue;
    const double* w = p.weights.data() + j * n_post;
    if (xj == 1.0) {
      for (std::size_t i = 0; i < n_post; ++i) cur[i] += w[i];
    } else {
      for (std::size_t i = 0; i < n_post; ++i) cur[i] += xj * w[i];
    }
  }
}

}  // namespace detail

struct LifStepResult {
  std::vector<double> v;
  std::vector<double> current;
  std::vector<double> spikes;
};

// Single-step LIF update for one layer.
inline LifStepResult lif_step(std::span<const double> v, std::span<const double> current,
                              std::span<const double> in_spikes, const LifLayerParams& params,
                              ActivationMode mode = ActivationMode::kHard,
                              double lambda = kSurrogateLambda) {
  if (v.size() != params.n_post() || current.size() != params.n_post()) {
    throw ValidationError("lif_step: state size does not match layer width");
  }
  if (in_spikes.size() != params.n_pre()) {
    throw ValidationError("lif_step: input size does not match layer fan-in");
  }
  LifStepResult r;
  r.v.assign(v.begin(), v.end());
  r.current.assign(current.begin(), current.end());
  r.spikes.assign(params.n_post(), 0.0);
  detail::step_state(params, mode, lambda, r.v, r.current, r.spikes, nullptr);
  detail::accumulate_current(params, in_spikes.data(), r.current);
  return r;
}

struct LayerTrace {
  Matrix v;        // T x n, membrane voltage at each step (pre-update)
  Matrix current;  // T x n, synaptic current at each step (pre-update)
  Matrix spikes;   // T x n for hidden layers; empty for the readout
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  ActivationMode mode = ActivationMode::kHard;
  std::size_t n_steps = 0;

  const Matrix& readout_voltage() const { return layers.back().v; }
};

// Simulates the whole network over a raster. All state starts at zero. When
// `frozen_resets` is given (finite-difference checks), hidden resets subtract
// those recorded values instead of the freshly computed activations.
inline ForwardTrace forward(const NetworkModel& model, const SpikeRaster& raster,
                            ActivationMode mode = ActivationMode::kHard,
                            const std::vector<Matrix>* frozen_resets = nullptr) {
  if (raster.n_neurons != model.n_inputs()) {
    throw ValidationError("raster width " + std::to_string(raster.n_neurons) +
                          " does not match network input " + std::to_string(model.n_inputs()));
  }
  if (raster.n_steps != model.t_total) {
    throw ValidationError("raster length " + std::to_string(raster.n_steps) +
                          " does not match t_total " + std::to_string(model.t_total));
  }
  const std::size_t n_layers = model.layers.size();
  const std::size_t t_total = model.t_total;

  ForwardTrace trace;
  trace.mode = mode;
  trace.n_steps = t_total;
  trace.layers.resize(n_layers);
  std::vector<std::vector<double>> v(n_layers), cur(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t n = model.layers[l].n_post();
    trace.layers[l].v = Matrix(t_total, n);
    trace.layers[l].current = Matrix(t_total, n);
    if (!model.layers[l].is_readout) trace.layers[l].spikes = Matrix(t_total, n);
    v[l].assign(n, 0.0);
    cur[l].assign(n, 0.0);
  }

  for (std::size_t t = 0; t < t_total; ++t) {
    for (std::size_t l = 0; l < n_layers; ++l) {
      const LifLayerParams& p = model.layers[l];
      LayerTrace& lt = trace.layers[l];
      const std::size_t n = p.n_post();
      for (std::size_t i = 0; i < n; ++i) {
        lt.v(t, i) = v[l][i];
        lt.current(t, i) = cur[l][i];
      }
      const double* frozen =
          (frozen_resets != nullptr && !p.is_readout && !(*frozen_resets)[l].empty())
              ? (*frozen_resets)[l].row(t).data()
              : nullptr;
      detail::step_state(p, mode, model.surrogate_lambda, v[l], cur[l],
                         p.is_readout ? std::span<double>{} : lt.spikes.row(t), frozen);
      if (l == 0) {
        detail::accumulate_current(p, raster.row(t), cur[l]);
      } else {
        detail::accumulate_current(p, trace.layers[l - 1].spikes.row(t).data(), cur[l]);
      }
    }
  }
  return trace;
}

// --- readout ----------------------------------------------------------------

struct ReadoutMax {
  std::vector<double> maxima;       // per output neuron
  std::vector<std::size_t> argmax;  // first time index attaining the maximum
};

// Per-class maximum voltage over the last `window` steps of the trace.
inline ReadoutMax readout_max(const Matrix& v_out, std::size_t window) {
  if (v_out.rows() == 0) throw ValidationError("readout_max: empty trace");
  if (window == 0 || window > v_out.rows()) window = v_out.rows();
  const std::size_t t0 = v_out.rows() - window;
  ReadoutMax r;
  r.maxima.assign(v_out.cols(), 0.0);
  r.argmax.assign(v_out.cols(), t0);
  for (std::size_t c = 0; c < v_out.cols(); ++c) {
    double best = v_out(t0, c);
    std::size_t best_t = t0;
    for (std::size_t t = t0 + 1; t < v_out.rows(); ++t) {
      if (v_out(t, c) > best) {
        best = v_out(t, c);
        best_t = t;
      }
    }
    r.maxima[c] = best;
    r.argmax[c] = best_t;
  }
  return r;
}

inline ReadoutMax readout_max(const ForwardTrace& trace, const NetworkModel& model) {
  return readout_max(trace.readout_voltage(), model.eval_window());
}

// Sum of hidden spike activity in a trace (a spike count in hard mode).
inline double hidden_spike_sum(const ForwardTrace& trace) {
  double total = 0.0;
  for (const LayerTrace& lt : trace.layers) {
    for (std::size_t i = 0; i < lt.spikes.size(); ++i) total += lt.spikes[i];
  }
  return total;
}

// --- backward (BPTT) --------------------------------------------------------

// Reverse-time unrolling of the forward recurrence with the surrogate
// substituted for dS/dV. The -S(t) reset term in the voltage update is
// treated as a constant: no gradient flows through it.
//
// Per layer, with lamV(t) = dL/dV(t) and lamI(t) = dL/dI(t):
//   lamV(t) = alpha*lamV(t+1) + dS(t)*g'(V(t))      (hidden)
//   lamV(t) = alpha*lamV(t+1) + grad_out(t)          (readout)
//   lamI(t) = lamV(t+1) + beta*lamI(t+1)
//   dW[j][i] += x_j(t) * lamI(t+1)[i]
//   dS_below(t)[j] = sum_i W[j][i] * lamI(t+1)[i]
inline std::vector<Matrix> backward(const NetworkModel& model, const SpikeRaster& raster,
                                    const ForwardTrace& trace, const Matrix& grad_out) {
  const std::size_t n_layers = model.layers.size();
  if (trace.layers.size() != n_layers) throw ValidationError("trace does not match model");
  const std::size_t t_total = model.t_total;
  if (trace.n_steps != t_total || grad_out.rows() != t_total ||
      grad_out.cols() != model.n_outputs()) {
    throw ValidationError("gradient shape does not match the trace");
  }

  std::vector<Matrix> grads(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    grads[l] = Matrix(model.layers[l].n_pre(), model.layers[l].n_post());
  }

  // dS carried from the layer above (dL/dS for each hidden step).
  Matrix ds_above;
  for (std::size_t li = n_layers; li-- > 0;) {
    const LifLayerParams& p = model.layers[li];
    const LayerTrace& lt = trace.layers[li];
    const std::size_t n = p.n_post();
    const std::size_t n_pre = p.n_pre();
    std::vector<double> lam_v(n, 0.0), lam_i(n, 0.0);
    std::vector<double> lam_v_next(n, 0.0), lam_i_next(n, 0.0);
    Matrix ds_below;
    if (li > 0) ds_below = Matrix(t_total, n_pre);

    for (std::size_t t = t_total; t-- > 0;) {
      // dW and dS_below consume lamI(t+1), held in lam_i_next.
      double* grad = grads[li].data();
      if (li == 0) {
        const std::uint8_t* x = raster.row(t);
        for (std::size_t j = 0; j < n_pre; ++j) {
          if (x[j] == 0) continue;
          double* row = grad + j * n;
          for (std::size_t i = 0; i < n; ++i) row[i] += lam_i_next[i];
        }
      } else {
        const auto x = trace.layers[li - 1].spikes.row(t);
        double* ds_row = ds_below.row(t).data();
        for (std::size_t j = 0; j < n_pre; ++j) {
          const double* w = p.weights.data() + j * n;
          double acc = 0.0;
          for (std::size_t i = 0; i < n; ++i) acc += w[i] * lam_i_next[i];
          ds_row[j] = acc;
          const double xj = x[j];
          if (xj != 0.0) {
            double* row = grad + j * n;
            for (std::size_t i = 0; i < n; ++i) row[i] += xj * lam_i_next[i];
          }
        }
      }

      for (std::size_t i = 0; i < n; ++i) {
        double lv = p.alpha * lam_v_next[i];
        if (p.is_readout) {
          lv += grad_out(t, i);
        } else {
          lv += ds_above(t, i) *
                surrogate_grad(lt.v(t, i), p.theta, model.surrogate_lambda);
        }
        lam_v[i] = lv;
        lam_i[i] = lam_v_next[i] + p.beta * lam_i_next[i];
      }
      lam_v_next = lam_v;
      lam_i_next = lam_i;
    }
    ds_above = std::move(ds_below);
  }
  return grads;
}

}  // namespace svad
