#pragma once

#include <limits>

namespace singerlab::contrastive {

struct PlateauConfig {
  double decay_factor = 0.5;
  int patience_decay = 25;
  int patience_stop = 100;
  double min_delta = 1e-4;

  static PlateauConfig contrastive() { return {0.5, 25, 100, 1e-4}; }
  static PlateauConfig probe() { return {0.1, 10, 20, 1e-4}; }
};

struct PlateauState {
  PlateauConfig config;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;
  double lr = 0.0;

  static PlateauState start(PlateauConfig config, double lr);
};

struct PlateauOutcome {
  bool improved = false;
  bool decayed = false;
  bool stop = false;
};

// One end-of-epoch update. The decay fires at every multiple of
// patience_decay, including the stopping epoch when it is one.
PlateauOutcome plateau_step(PlateauState& state, double val_loss);

}  // namespace singerlab::contrastive
