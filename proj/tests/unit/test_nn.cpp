#include <cmath>
#include <cstdint>
#include <utility>

#include "doctest.h"
#include "singerlab/common/error.hpp"
#include "singerlab/nn/adam.hpp"
#include "singerlab/nn/checkpoint.hpp"
#include "singerlab/nn/encoder.hpp"
#include "singerlab/nn/mlp_head.hpp"
#include "support/gradcheck_setup.hpp"

using namespace singerlab;
using namespace singerlab::nn;

namespace {

audio::MelSegment ramp_mel() {
  audio::MelSegment m;
  m.values.resize(audio::kMelBins * audio::kFrames);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = static_cast<float>(i % 977) * 0.001f;
  return m;
}

audio::MelSegment random_mel(std::uint64_t seed) {
  Rng rng(seed);
  audio::MelSegment m;
  m.values.resize(audio::kMelBins * audio::kFrames);
  for (auto& v : m.values) v = static_cast<float>(rng.normal());
  return m;
}

Matrix<float> encode(const Encoder<float>& enc, const ParamSet<float>& p, const audio::MelSegment& m) {
  const audio::MelSegment* ptr = &m;
  return enc.forward(p, stack_patches(std::span(&ptr, 1), enc.config()), 1, nullptr);
}

}  // namespace

TEST_CASE("patchify shape, constancy and exact reassembly") {
  const auto cfg = EncoderConfig::desk();
  const auto m = ramp_mel();
  const auto p = patchify(m, cfg);
  CHECK(p.rows() == 8 * 15);
  CHECK(p.cols() == 256);
  CHECK(unpatchify(p, cfg).values == m.values);
  // patch (1, 2) starts at mel row 16, frame 32
  CHECK(p(1 * 15 + 2, 0) == m.at(16, 32));
  CHECK(p(1 * 15 + 2, 17) == m.at(17, 33));

  audio::MelSegment c;
  c.values.assign(audio::kMelBins * audio::kFrames, 0.25f);
  const auto pc = patchify(c, cfg);
  for (Eigen::Index r = 1; r < pc.rows(); ++r) CHECK(pc.row(r) == pc.row(0));
}

TEST_CASE("encoder config validation and presets") {
  CHECK(EncoderConfig::paper().embed_dim == 2048);
  CHECK(EncoderConfig::desk().width == 96);
  auto bad = EncoderConfig::desk();
  bad.patch_h = 12;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = EncoderConfig::desk();
  bad.heads = 5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS(EncoderConfig::preset("huge"));
}

TEST_CASE("encoder parameter init") {
  const Encoder<float> enc(EncoderConfig::desk());
  const auto a = enc.init_params(7);
  const auto b = enc.init_params(7);
  CHECK(a.data() == b.data());
  CHECK(a.data() != enc.init_params(8).data());
  // patch 256*96+96, pos 120*96, 4 blocks of (2*96 + 96*288+288 + 96*96+96 + 2*96 + 96*384+384 + 384*96+96),
  // final norm 2*96, head 96*128+128
  const std::size_t block = 2 * 96 + 96 * 288 + 288 + 96 * 96 + 96 + 2 * 96 + 96 * 384 + 384 + 384 * 96 + 96;
  const std::size_t expected = 256 * 96 + 96 + 120 * 96 + 4 * block + 2 * 96 + 96 * 128 + 128;
  CHECK(a.size() == expected);
  CHECK(a.size() == 496160);
  for (const auto& s : a.specs()) {
    for (std::size_t i = 0; i < s.size; ++i) {
      const float v = a.data()[s.offset + i];
      REQUIRE(std::isfinite(v));
      if (s.init == Init::kTruncNormal) CHECK(std::abs(v) <= 2 * 0.02f + 1e-7f);
      if (s.init == Init::kZeros) CHECK(v == 0.0f);
    }
  }
}

TEST_CASE("encoder output, distinctness, position sensitivity, mismatch rejection") {
  const auto cfg = EncoderConfig::desk();
  const Encoder<float> enc(cfg);
  const auto p = enc.init_params(3);
  const auto m1 = random_mel(1), m2 = random_mel(2);
  const auto e1 = encode(enc, p, m1);
  CHECK(e1.cols() == 128);
  CHECK((e1 - encode(enc, p, m2)).norm() > 1e-6f);
  CHECK(e1 == encode(enc, p, m1));

  auto patches = patchify(m1, cfg);
  Matrix<float> shuffled = patches;
  for (Eigen::Index r = 0; r < patches.rows(); ++r) shuffled.row(r) = patches.row(patches.rows() - 1 - r);
  CHECK((enc.forward(p, shuffled, 1, nullptr) - e1).norm() > 1e-6f);

  const Encoder<float> other(EncoderConfig::paper());
  CHECK(other.config().embed_dim == 2048);
  CHECK_THROWS_AS(other.forward(p, patches, 1, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(enc.forward(p, patches, 2, nullptr), std::invalid_argument);
}

TEST_CASE("encoder output is finite on 1000 random standardised inputs") {
  auto cfg = EncoderConfig::desk();
  cfg.width = 32;
  cfg.depth = 2;
  const Encoder<float> enc(cfg);
  const auto p = enc.init_params(11);
  Rng rng(5);
  const int batch = 50;
  Matrix<float> x(batch * cfg.tokens(), cfg.patch_dim());
  for (int t = 0; t < 1000 / batch; ++t) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.normal());
    const auto e = enc.forward(p, x, batch, nullptr);
    REQUIRE(e.allFinite());
  }
}

TEST_CASE("projector: dims, zero input, inference leaves params untouched") {
  const MlpHead<float> head(HeadConfig::projector(128));
  CHECK(head.config().dims == std::vector<int>{128, 64, 128});
  CHECK(MlpHead<float>(HeadConfig::probe(128, 24)).config().out_dim() == 24);
  auto p = head.init_params(1);
  const auto before = p.checksum();
  const Matrix<float> zero = Matrix<float>::Zero(3, 128);
  const auto out = head.forward_infer(p, zero);
  CHECK(out.cols() == 128);
  CHECK(out.cwiseAbs().maxCoeff() < 1e-6f);
  CHECK(p.checksum() == before);
  Matrix<float> x = Matrix<float>::Random(4, 128);
  head.forward_train(p, x, nullptr);
  CHECK(p.checksum() != before);  // running statistics moved
}

TEST_CASE("batch norm running statistics use momentum 0.1 and unbiased variance") {
  ParamSet<double> ps;
  const auto g = ps.add("g", {2}, Init::kOnes);
  const auto b = ps.add("b", {2}, Init::kZeros);
  const auto m = ps.add("m", {2}, Init::kZeros, false);
  const auto v = ps.add("v", {2}, Init::kOnes, false);
  ps.initialize(0);
  Matrix<double> x(3, 2);
  x << 1, 10, 2, 20, 3, 60;
  Matrix<double> y;
  batchnorm_forward<double>(x, std::as_const(ps).vec(g), std::as_const(ps).vec(b), ps.vec(m), ps.vec(v), true, y, nullptr);
  // column 0: mean 2, unbiased var 1; column 1: mean 30, unbiased var 700
  CHECK(ps.vec(m)(0) == doctest::Approx(0.2));
  CHECK(ps.vec(m)(1) == doctest::Approx(3.0));
  CHECK(ps.vec(v)(0) == doctest::Approx(0.9 + 0.1 * 1.0));
  CHECK(ps.vec(v)(1) == doctest::Approx(0.9 + 0.1 * 700.0));
  CHECK(y.col(0).sum() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gradient check: encoder + projector, width 16 / depth 1") {
  const auto rep = oracle::run_encoder_projector_gradcheck(42, 24);
  INFO("encoder worst " << rep.encoder.worst_tensor << " " << rep.encoder.worst_rel_err);
  INFO("projector worst " << rep.projector.worst_tensor << " " << rep.projector.worst_rel_err);
  CHECK(rep.encoder.worst_rel_err < 1e-3);
  CHECK(rep.projector.worst_rel_err < 1e-3);
}

TEST_CASE("adam matches a hand-computed first step and skips frozen tensors") {
  ParamSet<double> p;
  const auto w = p.add("w", {2}, Init::kOnes);
  const auto f = p.add("frozen", {1}, Init::kOnes, false);
  p.initialize(0);
  CHECK(p.specs()[f].offset == 8);  // tensors start on 64-byte boundaries
  CHECK(reinterpret_cast<std::uintptr_t>(p.vec(f).data()) % 64 == 0);
  auto g = p.zeros_like();
  g.vec(w) << 0.5, -2.0;
  g.vec(f) << 9.0;
  Adam<double> opt(p, AdamConfig{});
  opt.step(p, g, 0.1);
  // first step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
  CHECK(p.vec(w)[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
  CHECK(p.vec(w)[1] == doctest::Approx(1.0 + 0.1 * 2.0 / (2.0 + 1e-8)));
  CHECK(p.vec(f)[0] == 1.0);
}

TEST_CASE("checkpoint round trip and rejection") {
  const Encoder<float> enc(EncoderConfig::desk());
  Checkpoint ck;
  ck.meta = {{"regime", "vocal"}};
  ck.groups["encoder"] = enc.init_params(5);
  ck.groups["projector"] = MlpHead<float>(HeadConfig::projector(128)).init_params(6);
  const auto bytes = serialize_checkpoint(ck);
  CHECK(bytes.substr(0, 8) == "SLCKPT01");
  const auto back = parse_checkpoint(bytes);
  CHECK(back.meta == ck.meta);
  CHECK(back.groups.at("encoder").data() == ck.groups["encoder"].data());
  CHECK(back.groups.at("encoder").same_layout(ck.groups["encoder"]));
  CHECK(back.groups.at("projector").specs()[2].trainable == true);
  CHECK(back.groups.at("projector").specs()[4].trainable == false);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK_THROWS(parse_checkpoint(bytes.substr(0, bytes.size() - 4)));
  CHECK_THROWS(parse_checkpoint("garbage-garbage-garbage"));
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ck.bin", "pretrain"), MissingArtifactError);
}
