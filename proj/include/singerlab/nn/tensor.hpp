#pragma once

#include <Eigen/Dense>
#include <Eigen/StdVector>
#include <cstdint>
#include <string>
#include <vector>

namespace singerlab::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using MatrixMap = Eigen::Map<Matrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const Matrix<T>>;
template <typename T>
using RowVectorMap = Eigen::Map<RowVector<T>>;
template <typename T>
using ConstRowVectorMap = Eigen::Map<const RowVector<T>>;

enum class Init { kTruncNormal, kZeros, kOnes };

inline constexpr double kInitStd = 0.02;

// Tensor starts are padded to this many bytes so vectorised reductions
// over a map always take the same path.
inline constexpr std::size_t kTensorAlignBytes = 64;

template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

struct TensorSpec {
  std::string name;
  std::vector<int> shape;  // 1-D tensors are treated as a single row
  std::size_t offset = 0;
  std::size_t size = 0;
  Init init = Init::kZeros;
  bool trainable = true;

  int rows() const { return shape.size() == 1 ? 1 : shape[0]; }
  int cols() const {
    if (shape.size() == 1) return shape[0];
    int c = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return c;
  }
};

// Named tensors packed in one flat buffer. The flat layout is what the
// optimiser, checkpoints and finite-difference checks operate on.
template <typename T>
class ParamSet {
 public:
  std::size_t add(std::string name, std::vector<int> shape, Init init, bool trainable = true) {
    TensorSpec spec;
    spec.name = std::move(name);
    spec.shape = std::move(shape);
    constexpr std::size_t step = kTensorAlignBytes / sizeof(T);
    spec.offset = (data_.size() + step - 1) / step * step;
    spec.size = 1;
    for (int d : spec.shape) spec.size *= static_cast<std::size_t>(d);
    spec.init = init;
    spec.trainable = trainable;
    data_.resize(spec.offset + spec.size, T(0));
    specs_.push_back(std::move(spec));
    return specs_.size() - 1;
  }

  // Truncated normal (std 0.02, cut at 2 std) for weights; zeros / ones
  // elsewhere.
  void initialize(std::uint64_t seed);

  MatrixMap<T> mat(std::size_t i) {
    const auto& s = specs_[i];
    return MatrixMap<T>(data_.data() + s.offset, s.rows(), s.cols());
  }
  ConstMatrixMap<T> mat(std::size_t i) const {
    const auto& s = specs_[i];
    return ConstMatrixMap<T>(data_.data() + s.offset, s.rows(), s.cols());
  }
  RowVectorMap<T> vec(std::size_t i) {
    const auto& s = specs_[i];
    return RowVectorMap<T>(data_.data() + s.offset, static_cast<Eigen::Index>(s.size));
  }
  ConstRowVectorMap<T> vec(std::size_t i) const {
    const auto& s = specs_[i];
    return ConstRowVectorMap<T>(data_.data() + s.offset, static_cast<Eigen::Index>(s.size));
  }

  AlignedVector<T>& data() { return data_; }
  const AlignedVector<T>& data() const { return data_; }
  const std::vector<TensorSpec>& specs() const { return specs_; }
  std::size_t size() const { return data_.size(); }
  std::size_t trainable_size() const {
    std::size_t n = 0;
    for (const auto& s : specs_) n += s.trainable ? s.size : 0;
    return n;
  }
  std::size_t index_of(const std::string& name) const;

  ParamSet zeros_like() const {
    ParamSet out = *this;
    std::fill(out.data_.begin(), out.data_.end(), T(0));
    return out;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& s : specs_) out.add(s.name, s.shape, s.init, s.trainable);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool same_layout(const ParamSet& other) const;

  // Checksum over the raw bytes; used to prove a frozen set is untouched.
  std::string checksum() const;

 private:
  std::vector<TensorSpec> specs_;
  AlignedVector<T> data_;
};

extern template class ParamSet<float>;
extern template class ParamSet<double>;

}  // namespace singerlab::nn
