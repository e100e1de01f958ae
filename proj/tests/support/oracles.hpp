#pragma once

// Independent reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "singerlab/common/rng.hpp"
#include "singerlab/nn/tensor.hpp"

namespace oracle {

// Enumerates every (i, k) cosine similarity directly, long double, no
// max-shift.
inline double nt_xent_bruteforce(const std::vector<std::vector<double>>& y, double temperature) {
  const std::size_t n = y.size();
  auto cosine = [&](std::size_t a, std::size_t b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t d = 0; d < y[a].size(); ++d) {
      dot += static_cast<long double>(y[a][d]) * y[b][d];
      na += static_cast<long double>(y[a][d]) * y[a][d];
      nb += static_cast<long double>(y[b][d]) * y[b][d];
    }
    return dot / std::sqrt(na * nb);
  };
  long double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i % 2 == 0) ? i + 1 : i - 1;
    long double denom = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      denom += std::exp(cosine(i, k) / temperature);
    }
    total += -std::log(std::exp(cosine(i, j) / temperature) / denom);
  }
  return static_cast<double>(total / n);
}

struct PlateauTrace {
  std::vector<double> lr_after;  // lr after each processed epoch
  int stop_epoch = -1;           // 0-based, -1 when never stopped
};

// Replays a loss sequence by tracking the length of the current
// non-improving run; lr = lr0 * factor^(number of completed decay spans).
inline PlateauTrace simulate_plateau(const std::vector<double>& losses, double lr0, double factor, int decay,
                                     int stop, double min_delta) {
  PlateauTrace t;
  double best = HUGE_VAL;
  int run = 0;
  int decays = 0;
  for (std::size_t e = 0; e < losses.size(); ++e) {
    const bool better = best == HUGE_VAL || losses[e] + min_delta < best;
    if (better) {
      best = losses[e];
      run = 0;
    } else {
      run += 1;
      decays += (run / decay) - ((run - 1) / decay);
    }
    t.lr_after.push_back(lr0 * std::pow(factor, decays));
    if (run == stop) {
      t.stop_epoch = static_cast<int>(e);
      break;
    }
  }
  return t;
}

struct GradCheckReport {
  std::string worst_tensor;
  double worst_rel_err = 0.0;
  std::size_t entries_checked = 0;
};

// Central differences on up to max_per_tensor sampled entries of every
// trainable tensor; relative error is ||analytic - fd|| / max(||analytic||,
// ||fd||, 1e-6) over the sampled entries of a tensor. The floor covers
// tensors whose exact gradient is zero (a bias feeding batch norm).
template <typename LossFn>
GradCheckReport finite_difference_check(singerlab::nn::ParamSet<double>& params,
                                        const singerlab::nn::ParamSet<double>& analytic, LossFn&& loss, double h,
                                        std::size_t max_per_tensor, std::uint64_t seed) {
  GradCheckReport rep;
  singerlab::Rng rng(seed);
  for (const auto& s : params.specs()) {
    if (!s.trainable) continue;
    std::vector<std::size_t> idx(s.size);
    for (std::size_t i = 0; i < s.size; ++i) idx[i] = s.offset + i;
    if (idx.size() > max_per_tensor) {
      rng.shuffle(idx);
      idx.resize(max_per_tensor);
    }
    double diff2 = 0, a2 = 0, f2 = 0;
    for (std::size_t i : idx) {
      double& p = params.data()[i];
      const double saved = p;
      p = saved + h;
      const double lp = loss();
      p = saved - h;
      const double lm = loss();
      p = saved;
      const double fd = (lp - lm) / (2 * h);
      const double an = analytic.data()[i];
      diff2 += (an - fd) * (an - fd);
      a2 += an * an;
      f2 += fd * fd;
    }
    rep.entries_checked += idx.size();
    const double denom = std::max(std::sqrt(std::max(a2, f2)), 1e-6);
    const double rel = std::sqrt(diff2) / denom;
    if (rep.worst_tensor.empty() || rel > rep.worst_rel_err) {
      rep.worst_rel_err = rel;
      rep.worst_tensor = s.name;
    }
  }
  return rep;
}

}  // namespace oracle
