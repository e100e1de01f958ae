#pragma once

#include <span>
#include <string>
#include <vector>

#include "singerlab/audio/mel.hpp"
#include "singerlab/nn/layers.hpp"

namespace singerlab::nn {

struct EncoderConfig {
  int patch_h = 16;
  int patch_w = 16;
  int width = 96;
  int depth = 4;
  int heads = 4;
  int embed_dim = 128;
  int mlp_ratio = 4;
  double dropout = 0.0;  // only 0 is implemented; kept for config fidelity

  // "desk": width 96, depth 4, heads 4, embed 128.
  static EncoderConfig desk();
  // "paper": small transformer (width 384, depth 12, heads 6), embed 2048.
  static EncoderConfig paper();
  static EncoderConfig preset(const std::string& name);

  int grid_rows() const { return audio::kMelBins / patch_h; }
  int grid_cols() const { return audio::kFrames / patch_w; }
  int tokens() const { return grid_rows() * grid_cols(); }
  int patch_dim() const { return patch_h * patch_w; }

  // Throws std::invalid_argument when patches do not tile 128 x 240 or
  // width is not divisible by heads.
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

// 120 x 256 for 16 x 16 patches: patch (r, c) is row r * grid_cols + c,
// its values flattened row-major.
Matrix<float> patchify(const audio::MelSegment& mel, const EncoderConfig& config);
audio::MelSegment unpatchify(const Matrix<float>& patches, const EncoderConfig& config);

template <typename T>
struct EncoderBlockCache {
  Matrix<T> x_in;
  LayerNormCache<T> ln1;
  Matrix<T> a1;
  Matrix<T> qkv;
  std::vector<Matrix<T>> probs;  // per (sample, head), tokens x tokens
  Matrix<T> attn;                // concatenated heads, before output projection
  Matrix<T> h;
  LayerNormCache<T> ln2;
  Matrix<T> a2;
  Matrix<T> pre_gelu;
  Matrix<T> post_gelu;
};

template <typename T>
struct EncoderCache {
  int batch = 0;
  Matrix<T> patches;
  std::vector<EncoderBlockCache<T>> blocks;
  LayerNormCache<T> ln_final;
  Matrix<T> pooled;
};

// Patch projection + learned positions, pre-norm transformer blocks
// (multi-head self-attention and a GELU MLP, both residual), final
// LayerNorm, mean pool over tokens, linear map to embed_dim.
template <typename T>
class Encoder {
 public:
  explicit Encoder(EncoderConfig config);

  const EncoderConfig& config() const { return config_; }

  // Layout of a parameter set; init_params fills it deterministically.
  ParamSet<T> make_params() const;
  ParamSet<T> init_params(std::uint64_t seed) const;

  // patches: (batch * tokens) x patch_dim. Returns batch x embed_dim.
  // With a cache, stores what backward needs.
  Matrix<T> forward(const ParamSet<T>& params, const Matrix<T>& patches, int batch, EncoderCache<T>* cache) const;

  // Accumulates into grads (same layout as params).
  void backward(const ParamSet<T>& params, const EncoderCache<T>& cache, const Matrix<T>& d_embedding,
                ParamSet<T>& grads) const;

  // Throws std::invalid_argument when params do not match this config.
  void check_params(const ParamSet<T>& params) const;

 private:
  struct BlockIndex {
    std::size_t ln1_g, ln1_b, qkv_w, qkv_b, out_w, out_b, ln2_g, ln2_b, fc1_w, fc1_b, fc2_w, fc2_b;
  };

  EncoderConfig config_;
  std::size_t patch_w_ = 0, patch_b_ = 0, pos_ = 0, lnf_g_ = 0, lnf_b_ = 0, head_w_ = 0, head_b_ = 0;
  std::vector<BlockIndex> blocks_;
  ParamSet<T> layout_;
};

extern template class Encoder<float>;
extern template class Encoder<double>;

// Stacks patchify() of several mels into one (n * tokens) x patch_dim matrix.
Matrix<float> stack_patches(std::span<const audio::MelSegment* const> mels, const EncoderConfig& config);

}  // namespace singerlab::nn
