#include "singerlab/contrastive/plateau.hpp"

#include <cmath>
#include <stdexcept>

namespace singerlab::contrastive {

PlateauState PlateauState::start(PlateauConfig config, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config.patience_decay <= 0 || config.patience_stop <= 0 || !(config.decay_factor > 0.0)) {
    throw std::invalid_argument("bad plateau configuration");
  }
  PlateauState s;
  s.config = config;
  s.lr = lr;
  return s;
}

PlateauOutcome plateau_step(PlateauState& s, double val_loss) {
  if (!std::isfinite(val_loss)) throw std::invalid_argument("plateau_step: validation loss is not finite");
  PlateauOutcome out;
  if (val_loss < s.best_val - s.config.min_delta) {
    s.best_val = val_loss;
    s.epochs_since_best = 0;
    out.improved = true;
    return out;
  }
  ++s.epochs_since_best;
  if (s.epochs_since_best % s.config.patience_decay == 0) {
    s.lr *= s.config.decay_factor;
    out.decayed = true;
  }
  if (s.epochs_since_best >= s.config.patience_stop) out.stop = true;
  return out;
}

}  // namespace singerlab::contrastive
