#include "singerlab/nn/mlp_head.hpp"

#include <stdexcept>
#include <string>

namespace singerlab::nn {

HeadConfig HeadConfig::projector(int embed_dim) {
  HeadConfig c;
  c.in_dim = embed_dim;
  c.dims = {embed_dim, embed_dim / 2, embed_dim};
  return c;
}

HeadConfig HeadConfig::probe(int embed_dim, int n_classes) {
  HeadConfig c;
  c.in_dim = embed_dim;
  c.dims = {embed_dim, embed_dim / 2, n_classes};
  return c;
}

void HeadConfig::validate() const {
  if (in_dim <= 0 || dims.size() != 3) throw std::invalid_argument("head needs three layers");
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("head layer dims must be positive");
  }
}

template <typename T>
MlpHead<T>::MlpHead(HeadConfig config) : config_(std::move(config)) {
  config_.validate();
  int in = config_.in_dim;
  for (std::size_t l = 0; l < config_.dims.size(); ++l) {
    const int out = config_.dims[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    LayerIndex li;
    li.w = layout_.add(pre + "w", {in, out}, Init::kTruncNormal);
    li.b = layout_.add(pre + "b", {out}, Init::kZeros);
    if (l + 1 < config_.dims.size()) {
      li.bn_g = layout_.add(pre + "bn.g", {out}, Init::kOnes);
      li.bn_b = layout_.add(pre + "bn.b", {out}, Init::kZeros);
      li.bn_mean = layout_.add(pre + "bn.running_mean", {out}, Init::kZeros, false);
      li.bn_var = layout_.add(pre + "bn.running_var", {out}, Init::kOnes, false);
    }
    layers_.push_back(li);
    in = out;
  }
}

template <typename T>
ParamSet<T> MlpHead<T>::init_params(std::uint64_t seed) const {
  ParamSet<T> p = make_params();
  p.initialize(seed);
  return p;
}

template <typename T>
void MlpHead<T>::check_params(const ParamSet<T>& params) const {
  if (!params.same_layout(layout_)) throw std::invalid_argument("head parameters do not match the configuration");
}

template <typename T>
Matrix<T> MlpHead<T>::forward_impl(ParamSet<T>* mut, const ParamSet<T>& P, const Matrix<T>& x, bool training,
                                   HeadCache<T>* cache) const {
  check_params(P);
  if (x.cols() != config_.in_dim) throw std::invalid_argument("head input has the wrong width");
  if (training && x.rows() < 2) throw std::invalid_argument("batch norm training needs at least 2 rows");
  if (cache) {
    cache->inputs.clear();
    cache->bn.assign(layers_.size() - 1, {});
    cache->pre_relu.assign(layers_.size() - 1, {});
  }
  Matrix<T> h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerIndex& li = layers_[l];
    Matrix<T> z;
    linear_forward<T>(h, P.mat(li.w), P.vec(li.b), z);
    if (cache) cache->inputs.push_back(std::move(h));
    if (l + 1 == layers_.size()) return z;
    Matrix<T> bn;
    if (training) {
      batchnorm_forward<T>(z, P.vec(li.bn_g), P.vec(li.bn_b), mut->vec(li.bn_mean), mut->vec(li.bn_var), true, bn,
                           cache ? &cache->bn[l] : nullptr);
    } else {
      RowVector<T> rm = P.vec(li.bn_mean);
      RowVector<T> rv = P.vec(li.bn_var);
      batchnorm_forward<T>(z, P.vec(li.bn_g), P.vec(li.bn_b), RowVectorMap<T>(rm.data(), rm.size()),
                           RowVectorMap<T>(rv.data(), rv.size()), false, bn, nullptr);
    }
    h = bn.cwiseMax(T(0));
    if (cache) cache->pre_relu[l] = std::move(bn);
  }
  return h;
}

template <typename T>
Matrix<T> MlpHead<T>::forward_train(ParamSet<T>& params, const Matrix<T>& x, HeadCache<T>* cache) const {
  return forward_impl(&params, params, x, true, cache);
}

template <typename T>
Matrix<T> MlpHead<T>::forward_infer(const ParamSet<T>& params, const Matrix<T>& x) const {
  return forward_impl(nullptr, params, x, false, nullptr);
}

template <typename T>
Matrix<T> MlpHead<T>::backward(const ParamSet<T>& P, const HeadCache<T>& c, const Matrix<T>& dy,
                               ParamSet<T>& G) const {
  check_params(P);
  check_params(G);
  Matrix<T> d = dy;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerIndex& li = layers_[l];
    if (l + 1 < layers_.size()) {
      d = (c.pre_relu[l].array() > T(0)).select(d, T(0));
      d = batchnorm_backward<T>(d, P.vec(li.bn_g), c.bn[l], G.vec(li.bn_g), G.vec(li.bn_b));
    }
    Matrix<T> dx;
    linear_backward<T>(c.inputs[l], P.mat(li.w), d, G.mat(li.w), G.vec(li.b), &dx);
    d = std::move(dx);
  }
  return d;
}

template class MlpHead<float>;
template class MlpHead<double>;

}  // namespace singerlab::nn
