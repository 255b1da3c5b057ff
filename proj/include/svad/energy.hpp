#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "svad/common.hpp"
#include "svad/encoding.hpp"
#include "svad/pruning.hpp"
#include "svad/snn.hpp"

namespace svad {

struct LayerSpikeStats {
  std::string name;
  std::size_t neurons = 0;
  double rate = 0.0;                    // mean spikes per neuron per inference
  double incoming_synapses = 0.0;       // surviving fan-in per neuron of this layer
  double sops = 0.0;                    // synaptic operations emitted by this layer
};

struct SpikeStats {
  std::vector<LayerSpikeStats> layers;  // input first, readout last
  double total_sops = 0.0;
  // Surviving incoming connections averaged over every neuron in the network
  // (input neurons included with zero fan-in).
  double mean_active_synapses_per_neuron = 0.0;
  double input_rate = 0.0;
  double mean_rate = 0.0;  // spikes per spiking neuron (input + hidden)
  std::size_t total_neurons = 0;
};

// Spike-rate and synaptic-operation statistics for a single inference.
// A SOP is one spike delivered across one surviving connection, so each
// spike contributes the emitting neuron's surviving fan-out.
inline SpikeStats spike_stats(const NetworkModel& model, const SpikeRaster& raster,
                              const ForwardTrace& trace,
                              const std::vector<const PruneMask*>& masks = {}) {
  const std::size_t n_layers = model.layers.size();
  auto mask_for = [&](std::size_t l) -> const PruneMask* {
    return l < masks.size() ? masks[l] : nullptr;
  };
  auto surviving_in_row = [&](std::size_t l, std::size_t j) -> std::size_t {
    const LifLayerParams& p = model.layers[l];
    const PruneMask* m = mask_for(l);
    if (m == nullptr || m->empty()) return p.n_post();
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.n_post(); ++i) n += m->bits[j * p.n_post() + i];
    return n;
  };

  SpikeStats stats;
  std::size_t surviving_total = 0;
  double spike_total = 0.0;
  std::size_t spiking_neurons = 0;

  // input layer: spikes come straight from the raster, fan-out through layer 0
  {
    LayerSpikeStats in;
    in.name = "input";
    in.neurons = raster.n_neurons;
    std::vector<std::size_t> fanout(raster.n_neurons);
    for (std::size_t j = 0; j < raster.n_neurons; ++j) fanout[j] = surviving_in_row(0, j);
    double spikes = 0.0, sops = 0.0;
    for (std::size_t t = 0; t < raster.n_steps; ++t) {
      const std::uint8_t* row = raster.row(t);
      for (std::size_t j = 0; j < raster.n_neurons; ++j) {
        if (row[j]) {
          spikes += 1.0;
          sops += static_cast<double>(fanout[j]);
        }
      }
    }
    in.rate = spikes / static_cast<double>(in.neurons);
    in.incoming_synapses = 0.0;
    in.sops = sops;
    stats.input_rate = in.rate;
    stats.total_sops += sops;
    stats.total_neurons += in.neurons;
    spike_total += spikes;
    spiking_neurons += in.neurons;
    stats.layers.push_back(in);
  }

  for (std::size_t l = 0; l < n_layers; ++l) {
    const LifLayerParams& p = model.layers[l];
    LayerSpikeStats ls;
    ls.name = p.is_readout ? "output" : "hidden" + std::to_string(l + 1);
    ls.neurons = p.n_post();

    const PruneMask* m = mask_for(l);
    const std::size_t surviving =
        (m == nullptr || m->empty()) ? p.weights.size() : m->ones();
    surviving_total += surviving;
    ls.incoming_synapses = static_cast<double>(surviving) / static_cast<double>(p.n_post());

    if (!p.is_readout) {
      std::vector<std::size_t> fanout(p.n_post());
      for (std::size_t i = 0; i < p.n_post(); ++i) fanout[i] = surviving_in_row(l + 1, i);
      const Matrix& s = trace.layers[l].spikes;
      double spikes = 0.0, sops = 0.0;
      for (std::size_t t = 0; t < s.rows(); ++t) {
        for (std::size_t i = 0; i < s.cols(); ++i) {
          if (s(t, i) != 0.0) {
            spikes += s(t, i);
            sops += s(t, i) * static_cast<double>(fanout[i]);
          }
        }
      }
      ls.rate = spikes / static_cast<double>(ls.neurons);
      ls.sops = sops;
      stats.total_sops += sops;
      spike_total += spikes;
      spiking_neurons += ls.neurons;
    }
    stats.total_neurons += ls.neurons;
    stats.layers.push_back(ls);
  }

  stats.mean_active_synapses_per_neuron =
      static_cast<double>(surviving_total) / static_cast<double>(stats.total_neurons);
  stats.mean_rate = spike_total / static_cast<double>(spiking_neurons);
  return stats;
}

// Reference-chip operating point. The chip's rate/synapse-dependent power
// curve is not modeled; the caller supplies the total chip power read off at
// the matching operating point.
struct PowerReference {
  std::string name;
  double total_chip_power_w = 0.0;
  double chip_neurons = 4096.0 * 256.0;  // 1,048,576
};

inline PowerReference truenorth_dense() { return {"truenorth-dense", 0.105}; }
inline PowerReference truenorth_sparse() { return {"truenorth-sparse", 0.080}; }

inline PowerReference power_preset(const std::string& name) {
  if (name == "truenorth-dense") return truenorth_dense();
  if (name == "truenorth-sparse") return truenorth_sparse();
  throw ValidationError("unknown power preset \"" + name +
                        "\" (known: truenorth-dense, truenorth-sparse)");
}

// Linear scaling from the reference chip: P = chip_power * n / chip_neurons.
inline double estimate_power(const PowerReference& ref, double n_neurons) {
  if (!(ref.total_chip_power_w > 0.0) || !(ref.chip_neurons > 0.0)) {
    throw ValidationError("power reference fields must be positive");
  }
  if (n_neurons < 0.0) throw ValidationError("neuron count must be non-negative");
  return ref.total_chip_power_w * n_neurons / ref.chip_neurons;
}

inline void write_energy_csv(const std::filesystem::path& path, const SpikeStats& stats,
                             const PowerReference& ref, double power_w) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write energy report: " + path.string());
  out.precision(17);
  out << "layer,rate,active_synapses,sops\n";
  for (const LayerSpikeStats& l : stats.layers) {
    out << l.name << ',' << l.rate << ',' << l.incoming_synapses << ',' << l.sops << '\n';
  }
  out << "network," << stats.mean_rate << ',' << stats.mean_active_synapses_per_neuron
      << ',' << stats.total_sops << '\n';
  out << "power_estimate_w," << power_w << ",ref=" << ref.name << ",neurons="
      << stats.total_neurons << '\n';
}

}  // namespace svad
