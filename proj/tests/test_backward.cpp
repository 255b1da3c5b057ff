#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "support/toy.hpp"
#include "svad/snn.hpp"
#include "svad/training.hpp"

using namespace svad;

TEST_CASE("surrogate derivative values", "[backward]") {
  CHECK(surrogate_grad(1.0) == 1.0);
  CHECK(surrogate_grad(1.1) == Catch::Approx(0.25));
  CHECK(surrogate_grad(0.9) == Catch::Approx(0.25));
  // symmetry about the threshold (up to rounding of the argument itself)
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const double d = rng.uniform(0.0, 3.0);
    CHECK(surrogate_grad(1.0 + d) ==
          Catch::Approx(surrogate_grad(1.0 - d)).margin(1e-14));
  }
}

TEST_CASE("fast sigmoid derivative is the surrogate", "[backward]") {
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    const double x = rng.uniform(-2.0, 2.0);
    const double h = 1e-6;
    const double fd = (fast_sigmoid(x + h) - fast_sigmoid(x - h)) / (2.0 * h);
    CHECK(fd == Catch::Approx(surrogate_grad(x + 1.0)).epsilon(1e-4));
  }
}

TEST_CASE("zero output gradient yields zero weight gradients", "[backward]") {
  Rng rng(3);
  const NetworkModel m = toy::random_tiny_net(rng);
  const Sample s = toy::random_tiny_sample(rng, m);
  const ForwardTrace trace = forward(m, s.raster);
  const Matrix grad_out(m.t_total, 2);
  const std::vector<Matrix> grads = backward(m, s.raster, trace, grad_out);
  for (const Matrix& g : grads) {
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
  }
}

TEST_CASE("smoothed-mode BPTT matches central finite differences", "[backward]") {
  Rng rng(4);
  int checked = 0;
  while (checked < 5) {
    const NetworkModel m = toy::random_tiny_net(rng);
    const Sample s = toy::random_tiny_sample(rng, m);
    if (!toy::readout_margin_ok(m, s)) continue;
    const GradCheckResult r = gradient_check(m, s, ActivationMode::kSmoothed);
    REQUIRE(r.applicable);
    INFO("net " << checked << " max rel error " << r.max_rel_error);
    CHECK(r.max_rel_error < 1e-4);
    ++checked;
  }
}

TEST_CASE("a fixed 2-3-2 smoothed net passes the gradient check", "[backward]") {
  Rng rng(5);
  NetworkModel m = make_network(2, {{3, 8.0, 4.0}, {2, 12.0, 6.0}}, 20, 0, 55);
  for (LifLayerParams& l : m.layers) {
    for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] = rng.uniform(-1.2, 1.2);
  }
  Sample s;
  s.raster = SpikeRaster(20, 2);
  s.raster.set(1, 0);
  s.raster.set(3, 1);
  s.raster.set(7, 0);
  s.raster.set(12, 1);
  s.label = 1;
  REQUIRE(toy::readout_margin_ok(m, s));
  const GradCheckResult r = gradient_check(m, s, ActivationMode::kSmoothed);
  REQUIRE(r.applicable);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("hard mode gradient check reports not applicable", "[backward]") {
  Rng rng(6);
  const NetworkModel m = toy::random_tiny_net(rng);
  const Sample s = toy::random_tiny_sample(rng, m);
  const GradCheckResult r = gradient_check(m, s, ActivationMode::kHard);
  CHECK_FALSE(r.applicable);
}

TEST_CASE("reset detachment: backward equals the zero-reset-path reference", "[backward]") {
  Rng rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    const NetworkModel m = toy::random_tiny_net(rng);
    const Sample s = toy::random_tiny_sample(rng, m, 0.35);
    const ActivationMode mode =
        trial % 2 == 0 ? ActivationMode::kHard : ActivationMode::kSmoothed;
    const ForwardTrace trace = forward(m, s.raster, mode);
    Matrix grad_out(m.t_total, 2);
    for (std::size_t t = 0; t < m.t_total; ++t) {
      grad_out(t, 0) = rng.uniform(-1.0, 1.0);
      grad_out(t, 1) = rng.uniform(-1.0, 1.0);
    }
    const std::vector<Matrix> got = backward(m, s.raster, trace, grad_out);
    const std::vector<Matrix> detached =
        oracle::bptt_reference(m, s.raster, trace, grad_out, /*reset_flow=*/false);
    for (std::size_t l = 0; l < got.size(); ++l) {
      REQUIRE(got[l].size() == detached[l].size());
      for (std::size_t i = 0; i < got[l].size(); ++i) {
        CHECK(got[l][i] == detached[l][i]);  // bit-for-bit
      }
    }
  }
}

TEST_CASE("routing gradient through the reset changes the result", "[backward]") {
  // sanity: the detachment matters on a network that actually spikes
  NetworkModel m = make_network(1, {{1, 10.0, 5.0}, {2, 10.0, 5.0}}, 30, 0, 8);
  m.layers[0].weights(0, 0) = 4.0;
  m.layers[1].weights(0, 0) = 1.0;
  m.layers[1].weights(0, 1) = -1.0;
  SpikeRaster raster(30, 1);
  raster.set(0, 0);
  raster.set(5, 0);
  raster.set(10, 0);
  const ForwardTrace trace = forward(m, raster);
  REQUIRE(hidden_spike_sum(trace) > 0.0);
  Matrix grad_out(30, 2);
  for (std::size_t t = 0; t < 30; ++t) grad_out(t, 0) = 1.0;
  SpikeRaster raster_copy = raster;
  const std::vector<Matrix> detached = backward(m, raster, trace, grad_out);
  const std::vector<Matrix> flowed =
      oracle::bptt_reference(m, raster_copy, trace, grad_out, /*reset_flow=*/true);
  double diff = 0.0;
  for (std::size_t i = 0; i < detached[0].size(); ++i) {
    diff += std::abs(detached[0][i] - flowed[0][i]);
  }
  CHECK(diff > 1e-6);
}

TEST_CASE("backward is bit-reproducible", "[backward]") {
  Rng rng(9);
  const NetworkModel m = toy::random_tiny_net(rng);
  const Sample s = toy::random_tiny_sample(rng, m);
  const ForwardTrace trace = forward(m, s.raster);
  Matrix grad_out(m.t_total, 2);
  grad_out(m.t_total - 1, 0) = 0.3;
  grad_out(m.t_total - 2, 1) = -0.7;
  const std::vector<Matrix> a = backward(m, s.raster, trace, grad_out);
  const std::vector<Matrix> b = backward(m, s.raster, trace, grad_out);
  for (std::size_t l = 0; l < a.size(); ++l) CHECK(a[l] == b[l]);
}
