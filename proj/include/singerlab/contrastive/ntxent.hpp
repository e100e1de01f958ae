#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "singerlab/nn/tensor.hpp"

namespace singerlab::contrastive {

inline constexpr double kDefaultTemperature = 0.2;
inline constexpr double kNormFloor = 1e-12;

// The loss as a function of the 2B x 2B cosine-similarity matrix.
template <typename T>
T nt_xent_from_cosine(const nn::Matrix<T>& cos_sim, double temperature) {
  const Eigen::Index n = cos_sim.rows();
  if (n < 2 || n % 2 != 0 || cos_sim.cols() != n) throw std::invalid_argument("bad similarity matrix");
  if (!(temperature > 0.0)) throw std::invalid_argument("nt_xent temperature must be positive");
  const T inv_t = static_cast<T>(1.0 / temperature);
  T total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) mx = std::max(mx, cos_sim(i, k) * inv_t);
    }
    T denom = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) denom += std::exp(cos_sim(i, k) * inv_t - mx);
    }
    total += -(cos_sim(i, i ^ 1) * inv_t - mx) + std::log(denom);
  }
  return total / static_cast<T>(n);
}

// Rows (2m, 2m+1) of y are the m-th positive pair. Returns the mean over
// all 2B ordered pairs of -log softmax over k != i of cos(y_i, y_k) / T.
// When grad is non-null it receives d loss / d y. Row norms are clamped
// below at kNormFloor, so an all-zero row has cosine 0 with everything.
template <typename T>
T nt_xent(const nn::Matrix<T>& y, double temperature, nn::Matrix<T>* grad) {
  const Eigen::Index n = y.rows();
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("nt_xent needs an even number (>= 2) of projections");
  if (!(temperature > 0.0)) throw std::invalid_argument("nt_xent temperature must be positive");
  nn::Matrix<T> norms = y.rowwise().norm();
  std::vector<bool> clamped(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(norms(i, 0))) throw std::invalid_argument("nt_xent: non-finite projection");
    if (norms(i, 0) < static_cast<T>(kNormFloor)) {
      norms(i, 0) = static_cast<T>(kNormFloor);
      clamped[static_cast<std::size_t>(i)] = true;
    }
  }
  const nn::Matrix<T> u = (y.array().colwise() / norms.col(0).array()).matrix();
  const T inv_t = static_cast<T>(1.0 / temperature);
  nn::Matrix<T> s = (u * u.transpose()) * inv_t;

  T total = 0;
  nn::Matrix<T> ds = nn::Matrix<T>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = i ^ 1;
    T mx = -std::numeric_limits<T>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) mx = std::max(mx, s(i, k));
    }
    T denom = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) denom += std::exp(s(i, k) - mx);
    }
    total += -(s(i, j) - mx) + std::log(denom);
    if (grad) {
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k != i) ds(i, k) = std::exp(s(i, k) - mx) / denom;
      }
      ds(i, j) -= T(1);
    }
  }
  const T scale = T(1) / static_cast<T>(n);
  if (grad) {
    ds *= scale;
    const nn::Matrix<T> du = (ds + ds.transpose()) * u * inv_t;
    nn::Matrix<T> radial = (du.array() * u.array()).rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (clamped[static_cast<std::size_t>(i)]) radial(i, 0) = T(0);
    }
    *grad = ((du.array() - u.array().colwise() * radial.col(0).array()).colwise() / norms.col(0).array()).matrix();
  }
  return total * scale;
}

}  // namespace singerlab::contrastive
