#include "singerlab/nn/encoder.hpp"

#include <stdexcept>

namespace singerlab::nn {

EncoderConfig EncoderConfig::desk() { return EncoderConfig{}; }

EncoderConfig EncoderConfig::paper() {
  EncoderConfig c;
  c.width = 384;
  c.depth = 12;
  c.heads = 6;
  c.embed_dim = 2048;
  return c;
}

EncoderConfig EncoderConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw std::invalid_argument("unknown encoder preset '" + name + "' (expected desk or paper)");
}

void EncoderConfig::validate() const {
  if (patch_h <= 0 || patch_w <= 0 || audio::kMelBins % patch_h != 0 || audio::kFrames % patch_w != 0) {
    throw std::invalid_argument("patch size must tile the 128 x 240 mel");
  }
  if (width <= 0 || heads <= 0 || width % heads != 0) {
    throw std::invalid_argument("width must be a positive multiple of heads");
  }
  if (depth < 0 || embed_dim <= 0 || mlp_ratio <= 0) throw std::invalid_argument("bad encoder dimensions");
  if (dropout != 0.0) throw std::invalid_argument("dropout is not supported");
}

Matrix<float> patchify(const audio::MelSegment& mel, const EncoderConfig& c) {
  if (mel.values.size() != static_cast<std::size_t>(audio::kMelBins) * audio::kFrames) {
    throw std::invalid_argument("patchify: mel must be 128 x 240");
  }
  Matrix<float> out(c.tokens(), c.patch_dim());
  for (int r = 0; r < c.grid_rows(); ++r) {
    for (int col = 0; col < c.grid_cols(); ++col) {
      const int p = r * c.grid_cols() + col;
      for (int i = 0; i < c.patch_h; ++i) {
        for (int j = 0; j < c.patch_w; ++j) out(p, i * c.patch_w + j) = mel.at(r * c.patch_h + i, col * c.patch_w + j);
      }
    }
  }
  return out;
}

audio::MelSegment unpatchify(const Matrix<float>& patches, const EncoderConfig& c) {
  audio::MelSegment mel;
  mel.values.assign(static_cast<std::size_t>(audio::kMelBins) * audio::kFrames, 0.0f);
  for (int r = 0; r < c.grid_rows(); ++r) {
    for (int col = 0; col < c.grid_cols(); ++col) {
      const int p = r * c.grid_cols() + col;
      for (int i = 0; i < c.patch_h; ++i) {
        for (int j = 0; j < c.patch_w; ++j) {
          mel.values[static_cast<std::size_t>(r * c.patch_h + i) * audio::kFrames + col * c.patch_w + j] =
              patches(p, i * c.patch_w + j);
        }
      }
    }
  }
  return mel;
}

Matrix<float> stack_patches(std::span<const audio::MelSegment* const> mels, const EncoderConfig& config) {
  const int tokens = config.tokens();
  Matrix<float> out(static_cast<Eigen::Index>(mels.size()) * tokens, config.patch_dim());
  for (std::size_t n = 0; n < mels.size(); ++n) {
    out.middleRows(static_cast<Eigen::Index>(n) * tokens, tokens) = patchify(*mels[n], config);
  }
  return out;
}

template <typename T>
Encoder<T>::Encoder(EncoderConfig config) : config_(config) {
  config_.validate();
  const int d = config_.width;
  const int hidden = d * config_.mlp_ratio;
  auto& p = layout_;
  patch_w_ = p.add("patch.w", {config_.patch_dim(), d}, Init::kTruncNormal);
  patch_b_ = p.add("patch.b", {d}, Init::kZeros);
  pos_ = p.add("pos", {config_.tokens(), d}, Init::kTruncNormal);
  for (int l = 0; l < config_.depth; ++l) {
    const std::string pre = "block" + std::to_string(l) + ".";
    BlockIndex b;
    b.ln1_g = p.add(pre + "ln1.g", {d}, Init::kOnes);
    b.ln1_b = p.add(pre + "ln1.b", {d}, Init::kZeros);
    b.qkv_w = p.add(pre + "attn.qkv.w", {d, 3 * d}, Init::kTruncNormal);
    b.qkv_b = p.add(pre + "attn.qkv.b", {3 * d}, Init::kZeros);
    b.out_w = p.add(pre + "attn.out.w", {d, d}, Init::kTruncNormal);
    b.out_b = p.add(pre + "attn.out.b", {d}, Init::kZeros);
    b.ln2_g = p.add(pre + "ln2.g", {d}, Init::kOnes);
    b.ln2_b = p.add(pre + "ln2.b", {d}, Init::kZeros);
    b.fc1_w = p.add(pre + "mlp.fc1.w", {d, hidden}, Init::kTruncNormal);
    b.fc1_b = p.add(pre + "mlp.fc1.b", {hidden}, Init::kZeros);
    b.fc2_w = p.add(pre + "mlp.fc2.w", {hidden, d}, Init::kTruncNormal);
    b.fc2_b = p.add(pre + "mlp.fc2.b", {d}, Init::kZeros);
    blocks_.push_back(b);
  }
  lnf_g_ = p.add("ln_final.g", {d}, Init::kOnes);
  lnf_b_ = p.add("ln_final.b", {d}, Init::kZeros);
  head_w_ = p.add("head.w", {d, config_.embed_dim}, Init::kTruncNormal);
  head_b_ = p.add("head.b", {config_.embed_dim}, Init::kZeros);
}

template <typename T>
ParamSet<T> Encoder<T>::make_params() const {
  return layout_.zeros_like();
}

template <typename T>
ParamSet<T> Encoder<T>::init_params(std::uint64_t seed) const {
  ParamSet<T> p = make_params();
  p.initialize(seed);
  return p;
}

template <typename T>
void Encoder<T>::check_params(const ParamSet<T>& params) const {
  if (!params.same_layout(layout_)) {
    throw std::invalid_argument("encoder parameters do not match the configuration");
  }
}

template <typename T>
Matrix<T> Encoder<T>::forward(const ParamSet<T>& P, const Matrix<T>& patches, int batch,
                              EncoderCache<T>* cache) const {
  check_params(P);
  const int L = config_.tokens();
  const int D = config_.width;
  const int H = config_.heads;
  const int dh = D / H;
  if (patches.rows() != static_cast<Eigen::Index>(batch) * L || patches.cols() != config_.patch_dim()) {
    throw std::invalid_argument("encoder input has the wrong shape");
  }
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  Matrix<T> x;
  linear_forward<T>(patches, P.mat(patch_w_), P.vec(patch_b_), x);
  const auto pos = P.mat(pos_);
  for (int n = 0; n < batch; ++n) x.middleRows(static_cast<Eigen::Index>(n) * L, L) += pos;

  if (cache) {
    cache->batch = batch;
    cache->patches = patches;
    cache->blocks.assign(blocks_.size(), {});
  }

  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const BlockIndex& b = blocks_[l];
    EncoderBlockCache<T>* bc = cache ? &cache->blocks[l] : nullptr;

    Matrix<T> a1;
    LayerNormCache<T> ln1;
    layernorm_forward<T>(x, P.vec(b.ln1_g), P.vec(b.ln1_b), a1, bc ? &ln1 : nullptr);
    Matrix<T> qkv;
    linear_forward<T>(a1, P.mat(b.qkv_w), P.vec(b.qkv_b), qkv);

    Matrix<T> attn(x.rows(), D);
    std::vector<Matrix<T>> probs;
    if (bc) probs.resize(static_cast<std::size_t>(batch) * H);
    for (int n = 0; n < batch; ++n) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(n) * L;
      for (int h = 0; h < H; ++h) {
        const auto q = qkv.block(r0, h * dh, L, dh);
        const auto k = qkv.block(r0, D + h * dh, L, dh);
        const auto v = qkv.block(r0, 2 * D + h * dh, L, dh);
        Matrix<T> s = (q * k.transpose()) * scale;
        softmax_rows<T>(s);
        attn.block(r0, h * dh, L, dh).noalias() = s * v;
        if (bc) probs[static_cast<std::size_t>(n) * H + h] = std::move(s);
      }
    }
    Matrix<T> proj;
    linear_forward<T>(attn, P.mat(b.out_w), P.vec(b.out_b), proj);
    Matrix<T> h = x + proj;

    Matrix<T> a2;
    LayerNormCache<T> ln2;
    layernorm_forward<T>(h, P.vec(b.ln2_g), P.vec(b.ln2_b), a2, bc ? &ln2 : nullptr);
    Matrix<T> pre;
    linear_forward<T>(a2, P.mat(b.fc1_w), P.vec(b.fc1_b), pre);
    Matrix<T> post = gelu_forward<T>(pre);
    Matrix<T> mlp;
    linear_forward<T>(post, P.mat(b.fc2_w), P.vec(b.fc2_b), mlp);

    if (bc) {
      bc->x_in = std::move(x);
      bc->ln1 = std::move(ln1);
      bc->a1 = std::move(a1);
      bc->qkv = std::move(qkv);
      bc->probs = std::move(probs);
      bc->attn = std::move(attn);
      bc->ln2 = std::move(ln2);
      bc->a2 = std::move(a2);
      bc->pre_gelu = std::move(pre);
      bc->post_gelu = std::move(post);
      x = h + mlp;
      bc->h = std::move(h);
    } else {
      x = h + mlp;
    }
  }

  Matrix<T> normed;
  layernorm_forward<T>(x, P.vec(lnf_g_), P.vec(lnf_b_), normed, cache ? &cache->ln_final : nullptr);
  Matrix<T> pooled(batch, D);
  for (int n = 0; n < batch; ++n) pooled.row(n) = normed.middleRows(static_cast<Eigen::Index>(n) * L, L).colwise().mean();
  Matrix<T> out;
  linear_forward<T>(pooled, P.mat(head_w_), P.vec(head_b_), out);
  if (cache) cache->pooled = std::move(pooled);
  return out;
}

template <typename T>
void Encoder<T>::backward(const ParamSet<T>& P, const EncoderCache<T>& c, const Matrix<T>& d_emb,
                          ParamSet<T>& G) const {
  check_params(P);
  check_params(G);
  const int batch = c.batch;
  const int L = config_.tokens();
  const int D = config_.width;
  const int H = config_.heads;
  const int dh = D / H;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  Matrix<T> d_pooled;
  linear_backward<T>(c.pooled, P.mat(head_w_), d_emb, G.mat(head_w_), G.vec(head_b_), &d_pooled);
  Matrix<T> d_normed(static_cast<Eigen::Index>(batch) * L, D);
  for (int n = 0; n < batch; ++n) {
    d_normed.middleRows(static_cast<Eigen::Index>(n) * L, L) =
        (d_pooled.row(n) / static_cast<T>(L)).replicate(L, 1);
  }
  Matrix<T> dx = layernorm_backward<T>(d_normed, P.vec(lnf_g_), c.ln_final, G.vec(lnf_g_), G.vec(lnf_b_));

  for (std::size_t li = blocks_.size(); li-- > 0;) {
    const BlockIndex& b = blocks_[li];
    const EncoderBlockCache<T>& bc = c.blocks[li];

    // x_out = h + mlp(ln2(h))
    Matrix<T> d_post;
    linear_backward<T>(bc.post_gelu, P.mat(b.fc2_w), dx, G.mat(b.fc2_w), G.vec(b.fc2_b), &d_post);
    const Matrix<T> d_pre = gelu_backward<T>(bc.pre_gelu, d_post);
    Matrix<T> d_a2;
    linear_backward<T>(bc.a2, P.mat(b.fc1_w), d_pre, G.mat(b.fc1_w), G.vec(b.fc1_b), &d_a2);
    Matrix<T> dh_total = dx + layernorm_backward<T>(d_a2, P.vec(b.ln2_g), bc.ln2, G.vec(b.ln2_g), G.vec(b.ln2_b));

    // h = x_in + attn_out(attention(ln1(x_in)))
    Matrix<T> d_attn;
    linear_backward<T>(bc.attn, P.mat(b.out_w), dh_total, G.mat(b.out_w), G.vec(b.out_b), &d_attn);
    Matrix<T> d_qkv(d_attn.rows(), 3 * D);
    for (int n = 0; n < batch; ++n) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(n) * L;
      for (int h = 0; h < H; ++h) {
        const Matrix<T>& p = bc.probs[static_cast<std::size_t>(n) * H + h];
        const auto q = bc.qkv.block(r0, h * dh, L, dh);
        const auto k = bc.qkv.block(r0, D + h * dh, L, dh);
        const auto v = bc.qkv.block(r0, 2 * D + h * dh, L, dh);
        const auto d_o = d_attn.block(r0, h * dh, L, dh);
        const Matrix<T> d_p = d_o * v.transpose();
        d_qkv.block(r0, 2 * D + h * dh, L, dh).noalias() = p.transpose() * d_o;
        const Matrix<T> row_dot = (d_p.array() * p.array()).rowwise().sum();
        Matrix<T> d_s = (p.array() * (d_p.array().colwise() - row_dot.col(0).array())).matrix();
        d_s *= scale;
        d_qkv.block(r0, h * dh, L, dh).noalias() = d_s * k;
        d_qkv.block(r0, D + h * dh, L, dh).noalias() = d_s.transpose() * q;
      }
    }
    Matrix<T> d_a1;
    linear_backward<T>(bc.a1, P.mat(b.qkv_w), d_qkv, G.mat(b.qkv_w), G.vec(b.qkv_b), &d_a1);
    dx = dh_total + layernorm_backward<T>(d_a1, P.vec(b.ln1_g), bc.ln1, G.vec(b.ln1_g), G.vec(b.ln1_b));
  }

  auto d_pos = G.mat(pos_);
  for (int n = 0; n < batch; ++n) d_pos += dx.middleRows(static_cast<Eigen::Index>(n) * L, L);
  linear_backward<T>(c.patches, P.mat(patch_w_), dx, G.mat(patch_w_), G.vec(patch_b_), nullptr);
}

template class Encoder<float>;
template class Encoder<double>;

}  // namespace singerlab::nn
