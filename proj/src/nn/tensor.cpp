#include "singerlab/nn/tensor.hpp"

#include <stdexcept>
#include <string_view>

#include "singerlab/common/io.hpp"
#include "singerlab/common/rng.hpp"

namespace singerlab::nn {

template <typename T>
void ParamSet<T>::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& s : specs_) {
    T* p = data_.data() + s.offset;
    for (std::size_t i = 0; i < s.size; ++i) {
      switch (s.init) {
        case Init::kZeros:
          p[i] = T(0);
          break;
        case Init::kOnes:
          p[i] = T(1);
          break;
        case Init::kTruncNormal: {
          double v;
          do {
            v = rng.normal();
          } while (std::abs(v) > 2.0);
          p[i] = static_cast<T>(v * kInitStd);
          break;
        }
      }
    }
  }
}

template <typename T>
std::size_t ParamSet<T>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == name) return i;
  }
  throw std::out_of_range("no tensor named '" + name + "'");
}

template <typename T>
bool ParamSet<T>::same_layout(const ParamSet& other) const {
  if (specs_.size() != other.specs_.size()) return false;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name != other.specs_[i].name || specs_[i].shape != other.specs_[i].shape) return false;
  }
  return true;
}

template <typename T>
std::string ParamSet<T>::checksum() const {
  return digest_hex(std::string_view(reinterpret_cast<const char*>(data_.data()), data_.size() * sizeof(T)));
}

template class ParamSet<float>;
template class ParamSet<double>;

}  // namespace singerlab::nn
