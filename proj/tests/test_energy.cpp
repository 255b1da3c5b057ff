#include <catch2/catch_amalgamated.hpp>

#include "svad/encoding.hpp"
#include "svad/energy.hpp"
#include "svad/snn.hpp"

using namespace svad;

TEST_CASE("input layer rate is exactly 1 for single-frame TTFS", "[energy]") {
  Rng rng(51);
  const NetworkModel m = make_h1(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> coeffs(128);
    for (double& c : coeffs) c = rng.uniform();
    const SpikeRaster raster = encode_frame(coeffs, 100);
    const ForwardTrace trace = forward(m, raster);
    const SpikeStats stats = spike_stats(m, raster, trace);
    CHECK(stats.input_rate == 1.0);
    CHECK(stats.layers[0].rate == 1.0);
  }
}

TEST_CASE("zero weights produce a silent hidden layer", "[energy]") {
  NetworkModel m = make_h1(2);
  for (LifLayerParams& l : m.layers) {
    for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] = 0.0;
  }
  std::vector<double> coeffs(128, 0.5);
  const SpikeRaster raster = encode_frame(coeffs, 100);
  const ForwardTrace trace = forward(m, raster);
  const SpikeStats stats = spike_stats(m, raster, trace);
  CHECK(stats.layers[1].rate == 0.0);
  CHECK(stats.layers[1].sops == 0.0);
  // the input still fires and fans out through the dense matrix
  CHECK(stats.layers[0].sops == 128.0 * 200.0);
}

TEST_CASE("SOPs equal the hand-counted spike x fan-out sum", "[energy]") {
  // two inputs -> two hidden -> two outputs, weights forced so the hidden
  // spike times are known
  NetworkModel m = make_network(2, {{2, 10.0, 5.0}, {2, 10.0, 5.0}}, 10, 0, 3);
  m.layers[0].weights(0, 0) = 4.0;  // input 0 drives hidden 0 hard
  m.layers[0].weights(0, 1) = 0.0;
  m.layers[0].weights(1, 0) = 0.0;
  m.layers[0].weights(1, 1) = 0.0;  // input 1 drives nothing
  m.layers[1].weights(0, 0) = 1.0;
  m.layers[1].weights(0, 1) = 1.0;
  m.layers[1].weights(1, 0) = 1.0;
  m.layers[1].weights(1, 1) = 1.0;

  SpikeRaster raster(10, 2);
  raster.set(0, 0);
  raster.set(2, 1);
  raster.set(4, 0);

  const ForwardTrace trace = forward(m, raster);
  const double hidden_spikes = hidden_spike_sum(trace);

  const SpikeStats stats = spike_stats(m, raster, trace);
  // 3 input spikes, each visiting 2 hidden synapses
  CHECK(stats.layers[0].sops == 3.0 * 2.0);
  // each hidden spike fans out to both readout neurons
  CHECK(stats.layers[1].sops == hidden_spikes * 2.0);
  CHECK(stats.total_sops == 6.0 + hidden_spikes * 2.0);
}

TEST_CASE("masks shrink fan-outs and SOP counts", "[energy]") {
  const NetworkModel m = make_h1(4);
  std::vector<double> coeffs(128);
  Rng rng(52);
  for (double& c : coeffs) c = rng.uniform();
  const SpikeRaster raster = encode_frame(coeffs, 100);
  const ForwardTrace trace = forward(m, raster);

  PruneMask dense = full_mask(128, 200);
  PruneMask half = dense;
  for (std::size_t i = 0; i < half.bits.size(); i += 2) half.bits[i] = 0;
  PruneMask quarter = half;
  for (std::size_t i = 1; i < quarter.bits.size(); i += 4) quarter.bits[i] = 0;

  const SpikeStats s_dense = spike_stats(m, raster, trace, {&dense, nullptr});
  const SpikeStats s_half = spike_stats(m, raster, trace, {&half, nullptr});
  const SpikeStats s_quarter = spike_stats(m, raster, trace, {&quarter, nullptr});
  CHECK(s_half.layers[0].sops < s_dense.layers[0].sops);
  CHECK(s_quarter.layers[0].sops < s_half.layers[0].sops);
  CHECK(s_half.total_sops < s_dense.total_sops);
}

TEST_CASE("whole-network active synapses match the dense/pruned bookkeeping", "[energy]") {
  const NetworkModel m = make_h1(5);
  std::vector<double> coeffs(128, 0.5);
  const SpikeRaster raster = encode_frame(coeffs, 100);
  const ForwardTrace trace = forward(m, raster);

  const SpikeStats dense = spike_stats(m, raster, trace);
  CHECK(dense.total_neurons == 330);
  CHECK(dense.mean_active_synapses_per_neuron == Catch::Approx(26000.0 / 330.0));

  // 15% of the input->hidden matrix surviving
  PruneMask sparse = full_mask(128, 200);
  std::size_t kill = 25600 - 3840;
  for (std::size_t i = 0; i < sparse.bits.size() && kill > 0; ++i, --kill) {
    sparse.bits[i] = 0;
  }
  const SpikeStats pruned = spike_stats(m, raster, trace, {&sparse, nullptr});
  CHECK(pruned.mean_active_synapses_per_neuron == Catch::Approx(4240.0 / 330.0));
}

TEST_CASE("power estimate reproduces the reference operating points", "[energy]") {
  CHECK(estimate_power(truenorth_dense(), 330.0) * 1e6 == Catch::Approx(33.0).margin(0.1));
  CHECK(estimate_power(truenorth_sparse(), 330.0) * 1e6 == Catch::Approx(25.1).margin(0.1));
  CHECK(estimate_power(truenorth_dense(), 0.0) == 0.0);
}

TEST_CASE("power estimate is linear in both arguments", "[energy]") {
  Rng rng(53);
  for (int i = 0; i < 30; ++i) {
    const double p = rng.uniform(0.01, 0.5);
    const double n = rng.uniform(1.0, 10000.0);
    const double k = rng.uniform(0.1, 5.0);
    PowerReference ref{"test", p};
    PowerReference scaled{"test", k * p};
    CHECK(estimate_power(scaled, n) == Catch::Approx(k * estimate_power(ref, n)));
    CHECK(estimate_power(ref, k * n) == Catch::Approx(k * estimate_power(ref, n)));
  }
}

TEST_CASE("power presets resolve by name", "[energy]") {
  CHECK(power_preset("truenorth-dense").total_chip_power_w == Catch::Approx(0.105));
  CHECK(power_preset("truenorth-sparse").total_chip_power_w == Catch::Approx(0.080));
  CHECK_THROWS_AS(power_preset("unknown"), ValidationError);
}
