#pragma once

#include <functional>
#include <vector>

#include "svad/pruning.hpp"
#include "svad/snn.hpp"
#include "svad/training.hpp"

namespace svad {

struct TicketIteration {
  double keep_fraction = 1.0;
  PruneMask mask;
  NetworkModel model;
  TrainHistory history;
};

using TicketTrainFn = std::function<TrainHistory(NetworkModel&, const PruneMask*)>;

// Iterative magnitude pruning with weight rewinding. Every iteration restarts
// from the SAME initialization vector, gated by the mask found so far; the
// mask for the next iteration comes from the freshly trained weights. Only
// the input->hidden matrix (layer 0) is pruned. Produces one entry for the
// dense run plus one per schedule step.
inline std::vector<TicketIteration> lottery_loop(const NetworkModel& init_model,
                                                 const TicketSchedule& schedule,
                                                 const TicketTrainFn& train_fn) {
  schedule.validate();
  std::vector<TicketIteration> iterations;
  iterations.reserve(schedule.keep_fractions.size() + 1);

  TicketIteration dense;
  dense.keep_fraction = 1.0;
  dense.mask = full_mask(init_model.layers[0].weights.rows(),
                         init_model.layers[0].weights.cols());
  dense.model = init_model;
  dense.history = train_fn(dense.model, nullptr);
  iterations.push_back(std::move(dense));

  for (double keep : schedule.keep_fractions) {
    TicketIteration it;
    it.keep_fraction = keep;
    it.mask = magnitude_prune(iterations.back().model.layers[0].weights,
                              iterations.back().mask, keep);
    it.model = init_model;  // rewind to the stored init, then gate
    apply_mask(it.model.layers[0].weights, it.mask);
    it.history = train_fn(it.model, &it.mask);
    iterations.push_back(std::move(it));
  }
  return iterations;
}

}  // namespace svad
