#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/toy.hpp"
#include "svad/lottery.hpp"
#include "svad/pruning.hpp"

using namespace svad;

TEST_CASE("magnitude pruning keeps the largest weights", "[pruning]") {
  Matrix w(1, 4);
  w[0] = 3.0;
  w[1] = -1.0;
  w[2] = 0.5;
  w[3] = -2.0;
  const PruneMask mask = magnitude_prune(w, full_mask(1, 4), 0.5);
  CHECK(mask.bits == std::vector<std::uint8_t>{1, 0, 0, 1});
  CHECK(mask.ones() == 2);
}

TEST_CASE("magnitude pruning breaks ties by lowest flat index", "[pruning]") {
  Matrix w(2, 2, 1.0);
  const PruneMask mask = magnitude_prune(w, full_mask(2, 2), 0.5);
  CHECK(mask.bits == std::vector<std::uint8_t>{1, 1, 0, 0});
}

TEST_CASE("keep fraction must fall below the current density", "[pruning]") {
  Matrix w(2, 2, 1.0);
  const PruneMask half = magnitude_prune(w, full_mask(2, 2), 0.5);
  CHECK_THROWS_AS(magnitude_prune(w, half, 0.5), ValidationError);
  CHECK_THROWS_AS(magnitude_prune(w, half, 0.8), ValidationError);
  CHECK_THROWS_AS(magnitude_prune(w, full_mask(2, 2), 0.0), ValidationError);
  CHECK_THROWS_AS(magnitude_prune(w, full_mask(1, 2), 0.5), ValidationError);
}

TEST_CASE("pruning selects only among surviving connections", "[pruning]") {
  Matrix w(1, 4);
  w[0] = 0.1;   // small but alive
  w[1] = 9.0;   // large but already pruned
  w[2] = 0.2;
  w[3] = 0.05;
  PruneMask current = full_mask(1, 4);
  current.bits[1] = 0;
  const PruneMask next = magnitude_prune(w, current, 0.25);
  CHECK(next.bits == std::vector<std::uint8_t>{0, 0, 1, 0});
}

TEST_CASE("apply_mask is idempotent and shape-checked", "[pruning]") {
  Rng rng(81);
  Matrix w(4, 4);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
  const Matrix original = w;
  PruneMask mask = full_mask(4, 4);
  apply_mask(w, mask);
  CHECK(w == original);  // full mask is the identity

  for (std::size_t i = 0; i < mask.bits.size(); i += 2) mask.bits[i] = 0;
  apply_mask(w, mask);
  const Matrix once = w;
  apply_mask(w, mask);
  CHECK(w == once);

  PruneMask zero{4, 4, std::vector<std::uint8_t>(16, 0)};
  apply_mask(w, zero);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == 0.0);

  CHECK_THROWS_AS(apply_mask(w, full_mask(2, 2)), ValidationError);
}

TEST_CASE("schedule validation", "[pruning]") {
  TicketSchedule{}.validate();
  TicketSchedule::standard().validate();
  CHECK_THROWS_AS((TicketSchedule{{0.4, 0.7}}).validate(), ValidationError);
  CHECK_THROWS_AS((TicketSchedule{{0.5, 0.5}}).validate(), ValidationError);
  CHECK_THROWS_AS((TicketSchedule{{1.2}}).validate(), ValidationError);
}

TEST_CASE("empty schedule runs the dense training once", "[pruning]") {
  const Dataset data = toy::make_dataset(8, 32, 30, 5);
  NetworkModel init = make_network(32, {{4}, {2}}, 30, 0, 3);
  int calls = 0;
  const auto iterations = lottery_loop(init, TicketSchedule{}, [&](NetworkModel& m, const PruneMask* mask) {
    ++calls;
    CHECK(mask == nullptr);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    return train(m, data, cfg);
  });
  CHECK(calls == 1);
  REQUIRE(iterations.size() == 1);
  CHECK(iterations[0].mask.density() == 1.0);
}

TEST_CASE("single-step schedule halves the connection count", "[pruning]") {
  const Dataset data = toy::make_dataset(16, 32, 30, 6);
  NetworkModel init = make_network(32, {{4}, {2}}, 30, 0, 4);
  const auto iterations =
      lottery_loop(init, TicketSchedule{{0.5}}, [&](NetworkModel& m, const PruneMask* mask) {
        TrainConfig cfg;
        cfg.epochs = 20;
        cfg.batch_size = 16;
        cfg.seed = 2;
        return train(m, data, cfg, mask);
      });
  REQUIRE(iterations.size() == 2);
  CHECK(iterations[1].mask.ones() == 64);  // round(0.5 * 128)
}

TEST_CASE("lottery iterations nest, rewind and track the schedule", "[pruning][slow]") {
  const std::uint64_t init_seed = 97;
  const Dataset data = toy::make_dataset(48, 128, 100, 7);
  const NetworkModel init = toy::make_toy_model(init_seed, 128, 16);
  const TicketSchedule schedule{{0.70, 0.40, 0.20, 0.15}};

  std::vector<const PruneMask*> seen_masks;
  const auto iterations =
      lottery_loop(init, schedule, [&](NetworkModel& m, const PruneMask* mask) {
        // rewind contract: surviving weights equal the init bit-for-bit
        for (std::size_t i = 0; i < m.layers[0].weights.size(); ++i) {
          if (mask == nullptr || mask->bits[i] == 1) {
            CHECK(m.layers[0].weights[i] == init.layers[0].weights[i]);
          } else {
            CHECK(m.layers[0].weights[i] == 0.0);
          }
        }
        TrainConfig cfg;
        cfg.epochs = 60;
        cfg.batch_size = 48;
        cfg.seed = 11;
        return train(m, data, cfg, mask);
      });

  REQUIRE(iterations.size() == 5);
  const std::size_t total = 128 * 16;
  CHECK(iterations[1].mask.ones() == std::llround(0.70 * total));
  CHECK(iterations[2].mask.ones() == std::llround(0.40 * total));
  CHECK(iterations[3].mask.ones() == std::llround(0.20 * total));
  CHECK(iterations[4].mask.ones() == std::llround(0.15 * total));

  // nesting: every surviving connection was alive in the previous iteration
  for (std::size_t i = 1; i < iterations.size(); ++i) {
    for (std::size_t b = 0; b < total; ++b) {
      CHECK(iterations[i].mask.bits[b] <= iterations[i - 1].mask.bits[b]);
    }
  }

  // trained weights respect the mask
  for (std::size_t i = 1; i < iterations.size(); ++i) {
    const Matrix& w = iterations[i].model.layers[0].weights;
    for (std::size_t b = 0; b < total; ++b) {
      if (iterations[i].mask.bits[b] == 0) CHECK(w[b] == 0.0);
    }
  }
}
