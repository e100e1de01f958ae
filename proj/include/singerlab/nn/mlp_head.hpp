#pragma once

#include <vector>

#include "singerlab/nn/layers.hpp"

namespace singerlab::nn {

// Three affine layers; batch norm + ReLU after the first two. Used for
// both the contrastive projector and the identification probe.
struct HeadConfig {
  int in_dim = 128;
  std::vector<int> dims{128, 64, 128};

  static HeadConfig projector(int embed_dim);
  static HeadConfig probe(int embed_dim, int n_classes);
  int out_dim() const { return dims.back(); }
  void validate() const;
};

template <typename T>
struct HeadCache {
  std::vector<Matrix<T>> inputs;  // input to each affine layer
  std::vector<BatchNormCache<T>> bn;
  std::vector<Matrix<T>> pre_relu;  // batch-norm outputs
};

template <typename T>
class MlpHead {
 public:
  explicit MlpHead(HeadConfig config);

  const HeadConfig& config() const { return config_; }
  ParamSet<T> make_params() const { return layout_.zeros_like(); }
  ParamSet<T> init_params(std::uint64_t seed) const;

  // Training mode normalises with batch statistics and updates the running
  // statistics stored in params; inference leaves params untouched.
  Matrix<T> forward_train(ParamSet<T>& params, const Matrix<T>& x, HeadCache<T>* cache) const;
  Matrix<T> forward_infer(const ParamSet<T>& params, const Matrix<T>& x) const;

  // Returns d loss / d x; accumulates trainable gradients into grads.
  Matrix<T> backward(const ParamSet<T>& params, const HeadCache<T>& cache, const Matrix<T>& dy,
                     ParamSet<T>& grads) const;

  void check_params(const ParamSet<T>& params) const;

 private:
  struct LayerIndex {
    std::size_t w, b, bn_g = 0, bn_b = 0, bn_mean = 0, bn_var = 0;
  };
  Matrix<T> forward_impl(ParamSet<T>* mut, const ParamSet<T>& params, const Matrix<T>& x, bool training,
                         HeadCache<T>* cache) const;

  HeadConfig config_;
  std::vector<LayerIndex> layers_;
  ParamSet<T> layout_;
};

extern template class MlpHead<float>;
extern template class MlpHead<double>;

}  // namespace singerlab::nn
