#pragma once

#include <cmath>

#include "singerlab/nn/tensor.hpp"

// Forward/backward pairs for the building blocks. Backward functions
// accumulate into parameter gradients (+=) and return the input gradient.
namespace singerlab::nn {

template <typename T>
void linear_forward(const Matrix<T>& x, const ConstMatrixMap<T>& w, const ConstRowVectorMap<T>& b, Matrix<T>& y) {
  y.noalias() = x * w;
  y.rowwise() += b;
}

template <typename T>
void linear_backward(const Matrix<T>& x, const ConstMatrixMap<T>& w, const Matrix<T>& dy, MatrixMap<T> dw,
                     RowVectorMap<T> db, Matrix<T>* dx) {
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();
  if (dx) dx->noalias() = dy * w.transpose();
}

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
struct LayerNormCache {
  Matrix<T> xhat;
  Matrix<T> rstd;  // rows x 1
};

template <typename T>
void layernorm_forward(const Matrix<T>& x, const ConstRowVectorMap<T>& gain, const ConstRowVectorMap<T>& bias,
                       Matrix<T>& y, LayerNormCache<T>* cache) {
  const auto cols = static_cast<T>(x.cols());
  Matrix<T> xhat(x.rows(), x.cols());
  Matrix<T> rstd(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mean = x.row(r).sum() / cols;
    const T var = (x.row(r).array() - mean).square().sum() / cols;
    const T rs = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    rstd(r, 0) = rs;
    xhat.row(r) = (x.row(r).array() - mean) * rs;
  }
  y = (xhat.array().rowwise() * gain.array()).rowwise() + bias.array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
}

template <typename T>
Matrix<T> layernorm_backward(const Matrix<T>& dy, const ConstRowVectorMap<T>& gain, const LayerNormCache<T>& c,
                             RowVectorMap<T> dgain, RowVectorMap<T> dbias) {
  dgain += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Matrix<T> dxhat = (dy.array().rowwise() * gain.array()).matrix();
  const auto cols = static_cast<T>(dy.cols());
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T mean_d = dxhat.row(r).sum() / cols;
    const T mean_dx = (dxhat.row(r).array() * c.xhat.row(r).array()).sum() / cols;
    dx.row(r) = c.rstd(r, 0) * (dxhat.row(r).array() - mean_d - c.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

// tanh-form GELU.
template <typename T>
Matrix<T> gelu_forward(const Matrix<T>& x) {
  const T k = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T c = static_cast<T>(0.044715);
  auto inner = (k * (x.array() + c * x.array().cube())).tanh();
  return (static_cast<T>(0.5) * x.array() * (static_cast<T>(1) + inner)).matrix();
}

template <typename T>
Matrix<T> gelu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
  const T k = static_cast<T>(0.7978845608028654);
  const T c = static_cast<T>(0.044715);
  const auto xa = x.array();
  const auto th = (k * (xa + c * xa.cube())).tanh().eval();
  const auto dinner = k * (static_cast<T>(1) + static_cast<T>(3) * c * xa.square());
  const auto grad = static_cast<T>(0.5) * (static_cast<T>(1) + th) +
                    static_cast<T>(0.5) * xa * (static_cast<T>(1) - th.square()) * dinner;
  return (dy.array() * grad).matrix();
}

template <typename T>
struct BatchNormCache {
  Matrix<T> xhat;
  RowVector<T> rstd;
};

// Training mode normalises with the batch's biased variance and updates
// the running statistics (unbiased variance); inference uses the running
// statistics.
template <typename T>
void batchnorm_forward(const Matrix<T>& x, const ConstRowVectorMap<T>& gain, const ConstRowVectorMap<T>& bias,
                       RowVectorMap<T> running_mean, RowVectorMap<T> running_var, bool training, Matrix<T>& y,
                       BatchNormCache<T>* cache) {
  const T eps = static_cast<T>(kBatchNormEps);
  if (!training) {
    const RowVector<T> rstd = (running_var.array() + eps).rsqrt().matrix();
    y = (((x.rowwise() - running_mean).array().rowwise() * rstd.array()).rowwise() * gain.array()).rowwise() +
        bias.array();
    return;
  }
  const auto n = static_cast<T>(x.rows());
  const RowVector<T> mean = x.colwise().mean();
  const Matrix<T> centered = x.rowwise() - mean;
  const RowVector<T> var = centered.array().square().colwise().sum().matrix() / n;
  const RowVector<T> rstd = (var.array() + eps).rsqrt().matrix();
  Matrix<T> xhat = (centered.array().rowwise() * rstd.array()).matrix();
  y = (xhat.array().rowwise() * gain.array()).rowwise() + bias.array();

  const T m = static_cast<T>(kBatchNormMomentum);
  const T unbias = x.rows() > 1 ? n / (n - T(1)) : T(1);
  running_mean = (T(1) - m) * running_mean + m * mean;
  running_var = (T(1) - m) * running_var + m * unbias * var;
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = rstd;
  }
}

template <typename T>
Matrix<T> batchnorm_backward(const Matrix<T>& dy, const ConstRowVectorMap<T>& gain, const BatchNormCache<T>& c,
                             RowVectorMap<T> dgain, RowVectorMap<T> dbias) {
  dgain += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Matrix<T> dxhat = (dy.array().rowwise() * gain.array()).matrix();
  const auto n = static_cast<T>(dy.rows());
  const RowVector<T> sum_d = dxhat.colwise().sum();
  const RowVector<T> sum_dx = (dxhat.array() * c.xhat.array()).colwise().sum().matrix();
  Matrix<T> dx = ((n * dxhat.array()).rowwise() - sum_d.array() -
                  (c.xhat.array().rowwise() * sum_dx.array()))
                     .matrix();
  dx = ((dx.array().rowwise() * c.rstd.array()) / n).matrix();
  return dx;
}

// Row-wise softmax in place.
template <typename T, typename Derived>
void softmax_rows(Eigen::MatrixBase<Derived>& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const T mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

}  // namespace singerlab::nn
