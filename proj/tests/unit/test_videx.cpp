#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "dpct/data/phantom.hpp"
#include "dpct/dv2sm/model.hpp"
#include "dpct/io/archive.hpp"
#include "dpct/videx/embedding.hpp"
#include "dpct/videx/videx.hpp"
#include "grad_check.hpp"
#include "small_model.hpp"

using namespace dpct;
using dpct::videx::SemanticEncoder;
using dpct::videx::SemanticEncoderConfig;

namespace {

Image random_unit(int rows, int cols, std::uint64_t seed) {
  return Image(rows, cols, dpct::testing::random_values(static_cast<std::size_t>(rows) * cols, seed, 0.0, 1.0));
}

SemanticEncoderConfig tiny_encoder(int patch = 4) {
  SemanticEncoderConfig c;
  c.patch_size = patch;
  c.depth = 2;
  c.embed_dim = 8;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.out_dim = 8;
  return c;
}

void put(io::Archive& ar, const std::string& name, std::vector<int> shape, std::uint64_t& seed, double scale = 0.3) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  ar.tensors[name] = {std::move(shape), dpct::testing::random_values(n, seed++, -scale, scale)};
}

// timm-named ViT archive with random weights.
io::Archive vit_archive(const SemanticEncoderConfig& c, int pos_side, bool cls, bool layer_scale, int out_dim) {
  io::Archive ar;
  std::uint64_t seed = 100;
  const int D = c.embed_dim, p = c.patch_size, M = D * c.mlp_ratio;
  put(ar, "patch_embed.proj.weight", {D, 3, p, p}, seed);
  put(ar, "patch_embed.proj.bias", {D}, seed);
  put(ar, "pos_embed", {1, pos_side * pos_side + (cls ? 1 : 0), D}, seed);
  if (cls) put(ar, "cls_token", {1, 1, D}, seed);
  for (int i = 0; i < c.depth; ++i) {
    const std::string b = "blocks." + std::to_string(i);
    put(ar, b + ".norm1.weight", {D}, seed, 1.0);
    put(ar, b + ".norm1.bias", {D}, seed);
    put(ar, b + ".norm2.weight", {D}, seed, 1.0);
    put(ar, b + ".norm2.bias", {D}, seed);
    put(ar, b + ".attn.qkv.weight", {3 * D, D}, seed);
    put(ar, b + ".attn.qkv.bias", {3 * D}, seed);
    put(ar, b + ".attn.proj.weight", {D, D}, seed);
    put(ar, b + ".attn.proj.bias", {D}, seed);
    put(ar, b + ".mlp.fc1.weight", {M, D}, seed);
    put(ar, b + ".mlp.fc1.bias", {M}, seed);
    put(ar, b + ".mlp.fc2.weight", {D, M}, seed);
    put(ar, b + ".mlp.fc2.bias", {D}, seed);
    if (layer_scale) {
      put(ar, b + ".ls1.gamma", {D}, seed, 1.0);
      put(ar, b + ".ls2.gamma", {D}, seed, 1.0);
    }
  }
  put(ar, "norm.weight", {D}, seed, 1.0);
  put(ar, "norm.bias", {D}, seed);
  if (out_dim != D) {
    put(ar, "out_proj.weight", {out_dim, D}, seed);
    put(ar, "out_proj.bias", {out_dim}, seed);
  }
  return ar;
}

using Mat = std::vector<std::vector<double>>;

Mat affine(const Mat& x, const io::TensorRecord& w, const io::TensorRecord* b) {
  const int out = w.shape[0], in = static_cast<int>(w.values.size()) / out;
  Mat y(x.size(), std::vector<double>(out, 0.0));
  for (std::size_t t = 0; t < x.size(); ++t)
    for (int o = 0; o < out; ++o) {
      double acc = b ? b->values[o] : 0.0;
      for (int i = 0; i < in; ++i) acc += w.values[static_cast<std::size_t>(o) * in + i] * x[t][i];
      y[t][o] = acc;
    }
  return y;
}

Mat norm(const Mat& x, const io::TensorRecord& g, const io::TensorRecord& b) {
  Mat y = x;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double n = static_cast<double>(x[t].size());
    double mu = 0, var = 0;
    for (double v : x[t]) mu += v / n;
    for (double v : x[t]) var += (v - mu) * (v - mu) / n;
    for (std::size_t d = 0; d < x[t].size(); ++d) y[t][d] = (x[t][d] - mu) / std::sqrt(var + 1e-6) * g.values[d] + b.values[d];
  }
  return y;
}

// Textbook pre-norm ViT forward, written independently of the library implementation.
FeatureMap reference_vit(const io::Archive& ar, const SemanticEncoderConfig& c, const Image& unit) {
  const auto& T = ar.tensors;
  const int p = c.patch_size, D = c.embed_dim, H = c.heads, dh = D / H;
  const int gh = unit.rows() / p, gw = unit.cols() / p;
  const double mean[3] = {0.485, 0.456, 0.406}, stdv[3] = {0.229, 0.224, 0.225};
  Mat tok;
  for (int gy = 0; gy < gh; ++gy)
    for (int gx = 0; gx < gw; ++gx) {
      std::vector<double> v;
      for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < p; ++y)
          for (int x = 0; x < p; ++x) v.push_back((unit(gy * p + y, gx * p + x) - mean[ch]) / stdv[ch]);
      tok.push_back(v);
    }
  Mat x = affine(tok, T.at("patch_embed.proj.weight"), &T.at("patch_embed.proj.bias"));
  const bool cls = T.count("cls_token") > 0;
  const auto& pos = T.at("pos_embed").values;
  for (std::size_t t = 0; t < x.size(); ++t)
    for (int d = 0; d < D; ++d) x[t][d] += pos[(t + (cls ? 1 : 0)) * D + d];
  if (cls) {
    std::vector<double> ct(D);
    for (int d = 0; d < D; ++d) ct[d] = T.at("cls_token").values[d] + pos[d];
    x.insert(x.begin(), ct);
  }
  const std::size_t n = x.size();
  for (int i = 0; i < c.depth; ++i) {
    const std::string b = "blocks." + std::to_string(i) + ".";
    const Mat qkv = affine(norm(x, T.at(b + "norm1.weight"), T.at(b + "norm1.bias")), T.at(b + "attn.qkv.weight"),
                           &T.at(b + "attn.qkv.bias"));
    Mat att(n, std::vector<double>(D, 0.0));
    for (int h = 0; h < H; ++h)
      for (std::size_t q = 0; q < n; ++q) {
        std::vector<double> s(n);
        double mx = -1e300, z = 0;
        for (std::size_t k = 0; k < n; ++k) {
          for (int e = 0; e < dh; ++e) s[k] += qkv[q][h * dh + e] * qkv[k][D + h * dh + e];
          s[k] /= std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[k]);
        }
        for (double& v : s) z += (v = std::exp(v - mx));
        for (std::size_t k = 0; k < n; ++k)
          for (int e = 0; e < dh; ++e) att[q][h * dh + e] += s[k] / z * qkv[k][2 * D + h * dh + e];
      }
    const Mat a = affine(att, T.at(b + "attn.proj.weight"), &T.at(b + "attn.proj.bias"));
    for (std::size_t t = 0; t < n; ++t)
      for (int d = 0; d < D; ++d) x[t][d] += a[t][d] * (T.count(b + "ls1.gamma") ? T.at(b + "ls1.gamma").values[d] : 1.0);
    Mat m = affine(norm(x, T.at(b + "norm2.weight"), T.at(b + "norm2.bias")), T.at(b + "mlp.fc1.weight"),
                   &T.at(b + "mlp.fc1.bias"));
    for (auto& row : m)
      for (double& v : row) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    const Mat f = affine(m, T.at(b + "mlp.fc2.weight"), &T.at(b + "mlp.fc2.bias"));
    for (std::size_t t = 0; t < n; ++t)
      for (int d = 0; d < D; ++d) x[t][d] += f[t][d] * (T.count(b + "ls2.gamma") ? T.at(b + "ls2.gamma").values[d] : 1.0);
  }
  x = norm(x, T.at("norm.weight"), T.at("norm.bias"));
  if (cls) x.erase(x.begin());
  if (T.count("out_proj.weight")) x = affine(x, T.at("out_proj.weight"), &T.at("out_proj.bias"));
  const int C = static_cast<int>(x[0].size());
  FeatureMap out(C, gh, gw);
  for (int g = 0; g < gh * gw; ++g)
    for (int ch = 0; ch < C; ++ch) out(ch, g / gw, g % gw) = x[static_cast<std::size_t>(g)][ch];
  return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(Patchify, GridCardinality) {
  const auto g512 = videx::patchify(Image(512, 512, 0.5));
  EXPECT_EQ(g512.grid_h, 32);
  EXPECT_EQ(g512.grid_w, 32);
  EXPECT_EQ(g512.count(), 1024);
  EXPECT_EQ(g512.token_size(), 16 * 16 * 3);
  EXPECT_EQ(g512.tokens.size(), 1024u * 768u);
  const auto g64 = videx::patchify(Image(64, 64, 0.5));
  EXPECT_EQ(g64.grid_h, 4);
  EXPECT_EQ(g64.grid_w, 4);
  EXPECT_THROW(videx::patchify(Image()), ArgumentError);
}

TEST(Patchify, ReflectPadsAndNormalizesEachChannel) {
  const Image img = random_unit(60, 60, 3);
  const auto g = videx::patchify(img);
  EXPECT_EQ(g.grid_h, 4);
  EXPECT_EQ(g.grid_w, 4);
  // Padded pixel (61, 62) mirrors source (57, 56); it sits in token (3, 3) at local (13, 14).
  const double* tok = g.tokens.data() + static_cast<std::size_t>(3 * 4 + 3) * g.token_size();
  for (int c = 0; c < 3; ++c) {
    const double want = (img(57, 56) - videx::kImageNetMean[c]) / videx::kImageNetStd[c];
    EXPECT_DOUBLE_EQ(tok[(c * 16 + 13) * 16 + 14], want);
  }
  const Image padded = videx::reflect_pad(Image(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6}), 4, 6);
  const std::vector<double> want{1, 2, 3, 2, 1, 2, 4, 5, 6, 5, 4, 5, 1, 2, 3, 2, 1, 2, 4, 5, 6, 5, 4, 5};
  EXPECT_EQ(padded.data(), want);
}

TEST(SemanticEncoder, DefaultShapeAndDeterminism) {
  const SemanticEncoder enc{SemanticEncoderConfig{}};
  EXPECT_FALSE(enc.pretrained());
  const Image img = random_unit(512, 512, 5);
  const FeatureMap X = enc(img);
  EXPECT_EQ(X.channels(), 192);
  EXPECT_EQ(X.height(), 32);
  EXPECT_EQ(X.width(), 32);
  EXPECT_TRUE(X.all_finite());
  EXPECT_EQ(enc(img), X);
  EXPECT_EQ(SemanticEncoder{SemanticEncoderConfig{}}.checksum(), enc.checksum());
}

TEST(SemanticEncoder, LoadedWeightsMatchReferenceForward) {
  for (const bool cls : {false, true})
    for (const bool ls : {false, true}) {
      auto cfg = tiny_encoder();
      cfg.out_dim = ls ? 6 : 8;
      const auto ar = vit_archive(cfg, 3, cls, ls, cfg.out_dim);
      const auto path = temp_file("dpct_test_vit.dpct");
      io::save_archive(path, ar);
      cfg.weights_path = path.string();
      const SemanticEncoder enc(cfg);
      EXPECT_TRUE(enc.pretrained());
      const Image img = random_unit(12, 12, 9);
      const FeatureMap got = enc(img);
      const FeatureMap want = reference_vit(ar, cfg, img);
      ASSERT_TRUE(got.same_shape(want));
      EXPECT_LT(max_abs_diff(got.data(), want.data()), 1e-10) << "cls=" << cls << " ls=" << ls;
      std::filesystem::remove(path);
    }
}

TEST(SemanticEncoder, ResizesConstantPositionGridWithoutChange) {
  auto cfg = tiny_encoder();
  auto small = vit_archive(cfg, 2, false, false, 8);
  auto large = small;
  std::vector<double> row(8);
  for (int d = 0; d < 8; ++d) row[d] = 0.1 * d - 0.3;
  auto fill = [&](io::Archive& ar, int side) {
    std::vector<double> v;
    for (int t = 0; t < side * side; ++t) v.insert(v.end(), row.begin(), row.end());
    ar.tensors["pos_embed"] = {{1, side * side, 8}, v};
  };
  fill(small, 2);
  fill(large, 4);
  const auto p1 = temp_file("dpct_test_vit_a.dpct"), p2 = temp_file("dpct_test_vit_b.dpct");
  io::save_archive(p1, small);
  io::save_archive(p2, large);
  auto c1 = cfg, c2 = cfg;
  c1.weights_path = p1.string();
  c2.weights_path = p2.string();
  const Image img = random_unit(16, 16, 4);
  EXPECT_LT(max_abs_diff(SemanticEncoder(c1)(img).data(), SemanticEncoder(c2)(img).data()), 1e-12);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST(SemanticEncoder, IncompatibleWeightsAreLoadErrors) {
  auto cfg = tiny_encoder();
  const auto path = temp_file("dpct_test_vit_bad.dpct");
  cfg.weights_path = path.string();
  EXPECT_THROW(SemanticEncoder{cfg}, LoadError);  // missing file

  auto ar = vit_archive(cfg, 2, false, false, 8);
  io::save_archive(path, ar);
  auto deeper = cfg;
  deeper.depth = 3;
  EXPECT_THROW(SemanticEncoder{deeper}, LoadError);
  auto wider = cfg;
  wider.embed_dim = 12;
  wider.out_dim = 12;
  EXPECT_THROW(SemanticEncoder{wider}, LoadError);
  auto projected = cfg;
  projected.out_dim = 5;
  EXPECT_THROW(SemanticEncoder{projected}, LoadError);  // no out_proj in the file
  ar.tensors.erase("blocks.1.mlp.fc2.weight");
  io::save_archive(path, ar);
  EXPECT_THROW(SemanticEncoder{cfg}, LoadError);
  std::filesystem::remove(path);
}

TEST(Upsample, ShapeConstantsAndRamp) {
  FeatureMap X(3, 2, 2);
  for (int c = 0; c < 3; ++c)
    for (double& v : X.channel(c)) v = 0.7 * c - 1.0;
  const FeatureMap Z = videx::upsample_semantic(X, 16, 30, 32);
  EXPECT_EQ(Z.channels(), 3);
  EXPECT_EQ(Z.height(), 30);
  EXPECT_EQ(Z.width(), 32);
  for (int c = 0; c < 3; ++c)
    for (double v : Z.channel(c)) EXPECT_EQ(v, 0.7 * c - 1.0);

  // Half-pixel centres: output x samples source (x + 0.5) / 2 - 0.5, clamped to [0, 1].
  const FeatureMap ramp(1, 1, 2, std::vector<double>{0.0, 1.0});
  const FeatureMap up = videx::upsample_semantic(ramp, 2, 1, 4);
  const std::vector<double> want{0.0, 0.25, 0.75, 1.0};
  EXPECT_EQ(up.data(), want);

  EXPECT_THROW(videx::upsample_semantic(X, 16, 40, 16), ArgumentError);
  EXPECT_THROW(videx::upsample_semantic(FeatureMap(), 16, 1, 1), ArgumentError);
}

TEST(Upsample, FullResolutionFromDefaultEncoder) {
  const FeatureMap X(192, 32, 32, 0.25);
  const FeatureMap Z = videx::upsample_semantic(X, 16, 512, 512);
  EXPECT_EQ(Z.channels(), 192);
  EXPECT_EQ(Z.height(), 512);
  EXPECT_EQ(Z.width(), 512);
}

TEST(Upsample, ShapeAlgebraForMultiplesOfPatch) {
  const SemanticEncoder enc(tiny_encoder(16));
  for (int h : {16, 48})
    for (int w : {16, 32, 64}) {
      const FeatureMap X = enc(random_unit(h, w, static_cast<std::uint64_t>(h * w)));
      const FeatureMap Z = videx::upsample_semantic(X, 16, h, w);
      EXPECT_EQ(Z.channels(), 8);
      EXPECT_EQ(Z.height(), h);
      EXPECT_EQ(Z.width(), w);
    }
}

TEST(Ldeb, ZeroKernelsGiveZeroOutput) {
  Rng rng = make_rng(1);
  videx::Ldeb ldeb(4, rng);
  ldeb.conv1.zero();
  ldeb.conv2.zero();
  const ag::Var out = ldeb(ag::Var::from(random_unit(10, 12, 2)));
  for (double v : out.value()) EXPECT_EQ(v, 0.0);
}

TEST(Ldeb, CenterDeltaIsIdentityOnNonNegativeInput) {
  Rng rng = make_rng(1);
  videx::Ldeb ldeb(3, rng);
  ldeb.conv1.zero();
  ldeb.conv2.zero();
  auto& w1 = ldeb.conv1.weight.mutable_value();
  auto& w2 = ldeb.conv2.weight.mutable_value();
  for (int o = 0; o < 3; ++o) w1[static_cast<std::size_t>(o) * 9 + 4] = 1.0;     // (o, 0, 1, 1)
  for (int o = 0; o < 3; ++o) w2[(static_cast<std::size_t>(o) * 3 + o) * 9 + 4] = 1.0;  // (o, o, 1, 1)
  const Image img = random_unit(128, 96, 7);
  const ag::Var out = ldeb(ag::Var::from(img));
  ASSERT_EQ(out.shape(), (std::vector<int>{3, 128, 96}));
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_DOUBLE_EQ(out.value()[c * img.size() + i], img.data()[i]);
}

TEST(Ldeb, ImpulseResponseSupportIsAtMostFiveByFive) {
  Rng rng = make_rng(3);
  videx::Ldeb ldeb(6, rng);
  for (double& b : ldeb.conv1.bias.mutable_value()) b = std::abs(b);  // keep ReLU active
  const ag::Var zero = ldeb(ag::Var::from(Image(15, 15)));
  Image delta(15, 15);
  delta(7, 7) = 1.0;
  const ag::Var out = ldeb(ag::Var::from(delta));
  int changed = 0;
  for (int c = 0; c < 6; ++c)
    for (int y = 0; y < 15; ++y)
      for (int x = 0; x < 15; ++x) {
        const std::size_t i = (static_cast<std::size_t>(c) * 15 + y) * 15 + x;
        if (out.value()[i] != zero.value()[i]) {
          ++changed;
          EXPECT_LE(std::abs(y - 7), 2);
          EXPECT_LE(std::abs(x - 7), 2);
        }
      }
  EXPECT_GT(changed, 0);
  EXPECT_THROW(ldeb(ag::Var::from(FeatureMap(2, 8, 8))), ArgumentError);
}

TEST(Fuse2fm, ShapeZeroAndMismatch) {
  Rng rng = make_rng(2);
  videx::Fuse2fm fuse(192, 64, 96, rng);
  const ag::Var Z = ag::Var::from(FeatureMap(192, 64, 64, 0.1));
  const ag::Var F = ag::Var::from(FeatureMap(64, 64, 64, -0.2));
  EXPECT_EQ(fuse(Z, F).shape(), (std::vector<int>{96, 64, 64}));
  fuse.proj.zero();
  for (double v : fuse(Z, F).value()) EXPECT_EQ(v, 0.0);

  videx::Fuse2fm fresh(192, 64, 96, rng);
  for (double& b : fresh.proj.bias.mutable_value()) b = 0.0;
  const ag::Var zeros = fresh(ag::Var::from(FeatureMap(192, 64, 64)), ag::Var::from(FeatureMap(64, 64, 64)));
  for (double v : zeros.value()) EXPECT_EQ(v, 0.0);

  EXPECT_THROW(fuse(Z, ag::Var::from(FeatureMap(64, 32, 32))), ArgumentError);
}

TEST(ViDex, GradientsReachFusionAndDetailBranch) {
  auto enc = std::make_shared<const SemanticEncoder>(tiny_encoder(16));
  Rng rng = make_rng(4);
  const videx::ViDex vd(enc, 4, 6, rng);
  const ag::Var img = ag::Var::from(random_unit(32, 32, 1));
  const ag::Var out = vd(img);
  EXPECT_EQ(out.shape(), (std::vector<int>{6, 32, 32}));
  ag::backward(ag::mean(ag::mul(out, out)));
  nn::ParamList params;
  vd.collect("", params);
  auto grad_norm = [](const ag::Var& v) {
    double s = 0;
    for (double g : v.grad()) s += g * g;
    return s;
  };
  // The first semantic input column of the fusion kernel only sees Z.
  const auto& wg = vd.fuse.proj.weight.grad();
  double semantic = 0;
  for (int o = 0; o < 6; ++o)
    for (int i = 0; i < 8; ++i) semantic += std::abs(wg[static_cast<std::size_t>(o) * 12 + i]);
  EXPECT_GT(semantic, 0.0);
  EXPECT_GT(grad_norm(vd.ldeb.conv1.weight), 0.0);
  EXPECT_GT(grad_norm(vd.ldeb.conv2.weight), 0.0);
  for (const auto& p : params) EXPECT_EQ(p.name.find("encoder"), std::string::npos) << p.name;
}

TEST(ViDex, EncoderUnchangedByOptimizerStep) {
  const auto cfg = dpct::testing::small_model_config(2);
  dv2sm::Model model(cfg);
  const std::uint64_t before = model.encoder().checksum();
  const ag::Var img = ag::Var::from(random_unit(32, 32, 6));
  ag::backward(ag::mse(model.forward(img), ag::Var::from(random_unit(32, 32, 7))));
  bool moved = false;
  for (auto& p : model.parameters()) {
    auto& v = p.var.mutable_value();
    const auto g = p.var.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      v[i] -= 0.1 * g[i];
      moved = moved || g[i] != 0.0;
    }
  }
  EXPECT_TRUE(moved);
  EXPECT_EQ(model.encoder().checksum(), before);
}

TEST(EmbedAnalysis, CardinalityCoincidenceAndOutputs) {
  const SemanticEncoder enc(tiny_encoder(16));
  std::vector<data::PairedSample> pairs;
  for (int i = 0; i < 3; ++i) {
    const Image hd = data::body_phantom(32, 32, 10 + i);
    Image ld = hd;
    if (i != 1)
      for (double& v : ld.data()) v = std::clamp(v + 40.0 * std::sin(v + i), data::kMinHu, data::kMaxHu);
    pairs.push_back({data::make_slice(ld, "P" + std::to_string(i), i), data::make_slice(hd, "P" + std::to_string(i), i)});
  }
  const auto a = videx::embed_analysis(pairs, enc);
  ASSERT_EQ(a.points.size(), 6u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.points[2 * i].dose, "ld");
    EXPECT_EQ(a.points[2 * i + 1].dose, "hd");
    EXPECT_EQ(a.points[2 * i].slice_index, i);
  }
  EXPECT_NEAR(a.points[2].x, a.points[3].x, 1e-12);
  EXPECT_NEAR(a.points[2].y, a.points[3].y, 1e-12);
  EXPECT_GE(a.explained_variance[0], a.explained_variance[1]);
  const double c = videx::pair_consistency(a, 1);
  EXPECT_GE(c, 0.0);
  EXPECT_LE(c, 1.0);

  const auto jsonl = temp_file("dpct_test_points.jsonl");
  videx::write_points_jsonl(jsonl, a);
  std::ifstream in(jsonl);
  int lines = 0;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("x") && j.contains("y") && j.contains("dose") && j.contains("slice_index"));
    ++lines;
  }
  EXPECT_EQ(lines, 6);
  const auto png = temp_file("dpct_test_points.png");
  videx::render_scatter_png(png, a, 64);
  EXPECT_GT(std::filesystem::file_size(png), 0u);
  std::filesystem::remove(jsonl);
  std::filesystem::remove(png);

  pairs.resize(1);
  EXPECT_THROW(videx::embed_analysis(pairs, enc), ArgumentError);
}
