#include "dpct/videx/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dpct/core/blas.hpp"
#include "dpct/core/checksum.hpp"
#include "dpct/core/rng.hpp"
#include "dpct/io/archive.hpp"

namespace dpct::videx {

namespace {

constexpr double kLnEps = 1e-6;

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

void layer_norm(std::vector<double>& out, const std::vector<double>& x, int T, int D,
                const SemanticEncoder::Norm& n) {
  out.resize(x.size());
  for (int t = 0; t < T; ++t) {
    const double* row = x.data() + static_cast<std::size_t>(t) * D;
    double mu = 0.0;
    for (int d = 0; d < D; ++d) mu += row[d];
    mu /= D;
    double var = 0.0;
    for (int d = 0; d < D; ++d) var += (row[d] - mu) * (row[d] - mu);
    const double rstd = 1.0 / std::sqrt(var / D + kLnEps);
    double* o = out.data() + static_cast<std::size_t>(t) * D;
    for (int d = 0; d < D; ++d) o[d] = (row[d] - mu) * rstd * n.gamma[d] + n.beta[d];
  }
}

// y (T x out) = x (T x in) W^T + b
void linear(std::vector<double>& y, const std::vector<double>& x, int T, const SemanticEncoder::Linear& l) {
  y.assign(static_cast<std::size_t>(T) * l.out, 0.0);
  blas::gemm(false, true, T, l.out, l.in, 1.0, x.data(), l.in, l.w.data(), l.in, 0.0, y.data(), l.out);
  if (!l.b.empty())
    for (int t = 0; t < T; ++t)
      for (int o = 0; o < l.out; ++o) y[static_cast<std::size_t>(t) * l.out + o] += l.b[o];
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

SemanticEncoder::Linear random_linear(int in, int out, Rng& rng) {
  std::normal_distribution<double> g(0.0, 0.02);
  SemanticEncoder::Linear l{std::vector<double>(static_cast<std::size_t>(in) * out), std::vector<double>(out, 0.0), in, out};
  for (double& w : l.w) {
    double v;
    do v = g(rng);
    while (std::abs(v) > 0.04);
    w = v;
  }
  return l;
}

SemanticEncoder::Norm unit_norm(int D) { return {std::vector<double>(D, 1.0), std::vector<double>(D, 0.0)}; }

std::vector<double> bilinear_resize_grid(const std::vector<double>& src, int sh, int sw, int D, int th, int tw) {
  std::vector<double> out(static_cast<std::size_t>(th) * tw * D);
  for (int y = 0; y < th; ++y) {
    const double sy = std::clamp((y + 0.5) * sh / th - 0.5, 0.0, sh - 1.0);
    const int y0 = static_cast<int>(sy), y1 = std::min(y0 + 1, sh - 1);
    const double fy = sy - y0;
    for (int x = 0; x < tw; ++x) {
      const double sx = std::clamp((x + 0.5) * sw / tw - 0.5, 0.0, sw - 1.0);
      const int x0 = static_cast<int>(sx), x1 = std::min(x0 + 1, sw - 1);
      const double fx = sx - x0;
      for (int d = 0; d < D; ++d) {
        auto at = [&](int r, int c) { return src[(static_cast<std::size_t>(r) * sw + c) * D + d]; };
        const double top = at(y0, x0) + fx * (at(y0, x1) - at(y0, x0));
        const double bot = at(y1, x0) + fx * (at(y1, x1) - at(y1, x0));
        out[(static_cast<std::size_t>(y) * tw + x) * D + d] = top + fy * (bot - top);
      }
    }
  }
  return out;
}

}  // namespace

Image reflect_pad(const Image& img, int rows, int cols) {
  require(!img.empty(), "reflect_pad: empty image");
  require(rows >= img.rows() && cols >= img.cols(), "reflect_pad: target smaller than source");
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = img(reflect_index(r, img.rows()), reflect_index(c, img.cols()));
  return out;
}

TokenGrid patchify(const Image& unit, int patch) {
  require(!unit.empty(), "patchify: empty image");
  require(patch >= 1, "patchify: patch size must be positive");
  TokenGrid g;
  g.patch = patch;
  g.rows = unit.rows();
  g.cols = unit.cols();
  g.grid_h = (unit.rows() + patch - 1) / patch;
  g.grid_w = (unit.cols() + patch - 1) / patch;
  const Image padded = reflect_pad(unit, g.grid_h * patch, g.grid_w * patch);
  const int ts = g.token_size();
  g.tokens.resize(static_cast<std::size_t>(g.count()) * ts);
  for (int gy = 0; gy < g.grid_h; ++gy)
    for (int gx = 0; gx < g.grid_w; ++gx) {
      double* tok = g.tokens.data() + static_cast<std::size_t>(gy * g.grid_w + gx) * ts;
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < patch; ++y)
          for (int x = 0; x < patch; ++x)
            tok[(c * patch + y) * patch + x] = (padded(gy * patch + y, gx * patch + x) - kImageNetMean[c]) / kImageNetStd[c];
    }
  return g;
}

nlohmann::json SemanticEncoderConfig::to_json() const {
  return {{"patch_size", patch_size}, {"depth", depth}, {"embed_dim", embed_dim}, {"heads", heads},
          {"mlp_ratio", mlp_ratio},   {"out_dim", out_dim}, {"weights_path", weights_path}, {"seed", seed}};
}

SemanticEncoderConfig SemanticEncoderConfig::from_json(const nlohmann::json& j) {
  SemanticEncoderConfig c;
  c.patch_size = j.value("patch_size", c.patch_size);
  c.depth = j.value("depth", c.depth);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.heads = j.value("heads", c.heads);
  c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
  c.out_dim = j.value("out_dim", c.out_dim);
  c.weights_path = j.value("weights_path", c.weights_path);
  c.seed = j.value("seed", c.seed);
  return c;
}

SemanticEncoder::SemanticEncoder(const SemanticEncoderConfig& cfg) : cfg_(cfg) {
  require(cfg.patch_size >= 1 && cfg.depth >= 1 && cfg.embed_dim >= 1 && cfg.out_dim >= 1 && cfg.mlp_ratio >= 1,
          "SemanticEncoder: dimensions must be positive");
  require(cfg.heads >= 1 && cfg.embed_dim % cfg.heads == 0, "SemanticEncoder: heads must divide embed_dim");
  if (cfg.weights_path.empty()) init_random();
  else load(cfg.weights_path);
}

void SemanticEncoder::init_random() {
  require(cfg_.embed_dim % 4 == 0, "SemanticEncoder: sin-cos position embedding needs embed_dim divisible by 4");
  Rng rng = make_rng(cfg_.seed, 0xE1C0);
  const int D = cfg_.embed_dim, P = 3 * cfg_.patch_size * cfg_.patch_size, M = D * cfg_.mlp_ratio;
  patch_embed_ = random_linear(P, D, rng);
  for (int i = 0; i < cfg_.depth; ++i) {
    Block b;
    b.norm1 = unit_norm(D);
    b.norm2 = unit_norm(D);
    b.qkv = random_linear(D, 3 * D, rng);
    b.proj = random_linear(D, D, rng);
    b.fc1 = random_linear(D, M, rng);
    b.fc2 = random_linear(M, D, rng);
    blocks_.push_back(std::move(b));
  }
  norm_ = unit_norm(D);
  if (cfg_.out_dim != D) out_proj_ = random_linear(D, cfg_.out_dim, rng);
}

void SemanticEncoder::load(const std::filesystem::path& path) {
  const io::Archive ar = io::load_archive(path);
  const int D = cfg_.embed_dim, p = cfg_.patch_size;
  auto get = [&](const std::string& name, const std::vector<int>& shape) -> const std::vector<double>& {
    auto it = ar.tensors.find(name);
    if (it == ar.tensors.end()) throw LoadError("encoder weights: missing tensor '" + name + "' in " + path.string());
    std::vector<int> s = it->second.shape;
    if (s != shape) {
      std::string want, got;
      for (int d : shape) want += std::to_string(d) + " ";
      for (int d : s) got += std::to_string(d) + " ";
      throw LoadError("encoder weights: tensor '" + name + "' has shape [" + got + "], configuration expects [" + want + "]");
    }
    return it->second.values;
  };
  auto has = [&](const std::string& name) { return ar.tensors.count(name) > 0; };
  auto lin = [&](const std::string& prefix, int in, int out, bool bias) {
    Linear l{get(prefix + ".weight", {out, in}), {}, in, out};
    if (bias && has(prefix + ".bias")) l.b = get(prefix + ".bias", {out});
    return l;
  };
  auto norm = [&](const std::string& prefix) { return Norm{get(prefix + ".weight", {D}), get(prefix + ".bias", {D})}; };

  const int P = 3 * p * p, M = D * cfg_.mlp_ratio;
  patch_embed_ = Linear{get("patch_embed.proj.weight", {D, 3, p, p}), get("patch_embed.proj.bias", {D}), P, D};
  int n_blocks = 0;
  while (has("blocks." + std::to_string(n_blocks) + ".norm1.weight")) ++n_blocks;
  if (n_blocks != cfg_.depth)
    throw LoadError("encoder weights: file has " + std::to_string(n_blocks) + " blocks, configuration expects " +
                    std::to_string(cfg_.depth));
  for (int i = 0; i < n_blocks; ++i) {
    const std::string b = "blocks." + std::to_string(i);
    Block blk;
    blk.norm1 = norm(b + ".norm1");
    blk.norm2 = norm(b + ".norm2");
    blk.qkv = lin(b + ".attn.qkv", D, 3 * D, true);
    blk.proj = lin(b + ".attn.proj", D, D, true);
    blk.fc1 = lin(b + ".mlp.fc1", D, M, true);
    blk.fc2 = lin(b + ".mlp.fc2", M, D, true);
    if (has(b + ".ls1.gamma")) blk.ls1 = get(b + ".ls1.gamma", {D});
    if (has(b + ".ls2.gamma")) blk.ls2 = get(b + ".ls2.gamma", {D});
    blocks_.push_back(std::move(blk));
  }
  norm_ = norm("norm");
  const bool cls = has("cls_token");
  if (cls) cls_token_ = get("cls_token", {1, 1, D});
  auto pit = ar.tensors.find("pos_embed");
  if (pit == ar.tensors.end()) throw LoadError("encoder weights: missing tensor 'pos_embed'");
  const auto& ps = pit->second.shape;
  if (ps.size() != 3 || ps[0] != 1 || ps[2] != D) throw LoadError("encoder weights: pos_embed must be (1, T, embed_dim)");
  const int n_grid = ps[1] - (cls ? 1 : 0);
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_grid))));
  if (side * side != n_grid) throw LoadError("encoder weights: pos_embed grid is not square");
  pos_h_ = pos_w_ = side;
  const auto& pv = pit->second.values;
  if (cls) cls_pos_.assign(pv.begin(), pv.begin() + D);
  pos_embed_.assign(pv.begin() + (cls ? D : 0), pv.end());
  if (has("out_proj.weight")) out_proj_ = lin("out_proj", D, cfg_.out_dim, true);
  else if (cfg_.out_dim != D)
    throw LoadError("encoder weights: out_dim differs from embed_dim but the file has no 'out_proj.weight'");
  pretrained_ = true;
}

std::vector<double> SemanticEncoder::position_embedding(int gh, int gw) const {
  const int D = cfg_.embed_dim;
  if (!pos_embed_.empty()) {
    if (gh == pos_h_ && gw == pos_w_) return pos_embed_;
    return bilinear_resize_grid(pos_embed_, pos_h_, pos_w_, D, gh, gw);
  }
  // 2D sin-cos: first half encodes the row coordinate, second half the column.
  std::vector<double> pe(static_cast<std::size_t>(gh) * gw * D);
  const int q = D / 4;
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) {
      double* e = pe.data() + (static_cast<std::size_t>(y) * gw + x) * D;
      for (int i = 0; i < q; ++i) {
        const double omega = 1.0 / std::pow(10000.0, static_cast<double>(i) / q);
        e[i] = std::sin(y * omega);
        e[q + i] = std::cos(y * omega);
        e[2 * q + i] = std::sin(x * omega);
        e[3 * q + i] = std::cos(x * omega);
      }
    }
  return pe;
}

FeatureMap SemanticEncoder::encode(const TokenGrid& grid) const {
  require(grid.patch == cfg_.patch_size, "SemanticEncoder: token patch size does not match the configuration");
  require(grid.count() > 0, "SemanticEncoder: empty token grid");
  const int D = cfg_.embed_dim, H = cfg_.heads, dh = D / H;
  const int G = grid.count(), off = cls_token_.empty() ? 0 : 1, T = G + off;

  std::vector<double> emb;
  linear(emb, grid.tokens, G, patch_embed_);
  const std::vector<double> pe = position_embedding(grid.grid_h, grid.grid_w);
  std::vector<double> x(static_cast<std::size_t>(T) * D);
  if (off)
    for (int d = 0; d < D; ++d) x[d] = cls_token_[d] + (cls_pos_.empty() ? 0.0 : cls_pos_[d]);
  for (std::size_t i = 0; i < emb.size(); ++i) x[static_cast<std::size_t>(off) * D + i] = emb[i] + pe[i];

  std::vector<double> h, qkv, attn(static_cast<std::size_t>(T) * D), s(static_cast<std::size_t>(T) * T), tmp, mid;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const Block& b : blocks_) {
    layer_norm(h, x, T, D, b.norm1);
    linear(qkv, h, T, b.qkv);
    for (int head = 0; head < H; ++head) {
      const double* q = qkv.data() + head * dh;
      const double* k = qkv.data() + D + head * dh;
      const double* v = qkv.data() + 2 * D + head * dh;
      blas::gemm(false, true, T, T, dh, scale, q, 3 * D, k, 3 * D, 0.0, s.data(), T);
      for (int t = 0; t < T; ++t) {
        double* row = s.data() + static_cast<std::size_t>(t) * T;
        const double mx = *std::max_element(row, row + T);
        double z = 0.0;
        for (int j = 0; j < T; ++j) z += (row[j] = std::exp(row[j] - mx));
        for (int j = 0; j < T; ++j) row[j] /= z;
      }
      blas::gemm(false, false, T, dh, T, 1.0, s.data(), T, v, 3 * D, 0.0, attn.data() + head * dh, D);
    }
    linear(tmp, attn, T, b.proj);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += tmp[i] * (b.ls1.empty() ? 1.0 : b.ls1[i % D]);
    layer_norm(h, x, T, D, b.norm2);
    linear(mid, h, T, b.fc1);
    for (double& m : mid) m = gelu(m);
    linear(tmp, mid, T, b.fc2);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += tmp[i] * (b.ls2.empty() ? 1.0 : b.ls2[i % D]);
  }
  layer_norm(h, x, T, D, norm_);
  std::vector<double> patches(h.begin() + static_cast<std::ptrdiff_t>(off) * D, h.end());
  int C = D;
  if (!out_proj_.w.empty()) {
    linear(tmp, patches, G, out_proj_);
    patches.swap(tmp);
    C = out_proj_.out;
  }
  FeatureMap X(C, grid.grid_h, grid.grid_w);
  for (int g = 0; g < G; ++g)
    for (int c = 0; c < C; ++c) X.data()[static_cast<std::size_t>(c) * G + g] = patches[static_cast<std::size_t>(g) * C + c];
  return X;
}

std::uint64_t SemanticEncoder::checksum() const {
  std::uint64_t h = fnv1a(patch_embed_.w);
  h = fnv1a(patch_embed_.b, h);
  h = fnv1a(pos_embed_, h);
  h = fnv1a(cls_token_, h);
  for (const Block& b : blocks_)
    for (const auto* v : {&b.norm1.gamma, &b.norm1.beta, &b.norm2.gamma, &b.norm2.beta, &b.qkv.w, &b.qkv.b, &b.proj.w,
                          &b.proj.b, &b.fc1.w, &b.fc1.b, &b.fc2.w, &b.fc2.b, &b.ls1, &b.ls2})
      h = fnv1a(*v, h);
  h = fnv1a(norm_.gamma, h);
  h = fnv1a(norm_.beta, h);
  h = fnv1a(out_proj_.w, h);
  return fnv1a(out_proj_.b, h);
}

std::size_t SemanticEncoder::parameter_count() const {
  std::size_t n = patch_embed_.w.size() + patch_embed_.b.size() + pos_embed_.size() + cls_token_.size() +
                  cls_pos_.size() + norm_.gamma.size() + norm_.beta.size() + out_proj_.w.size() + out_proj_.b.size();
  for (const Block& b : blocks_)
    n += b.norm1.gamma.size() * 4 + b.qkv.w.size() + b.qkv.b.size() + b.proj.w.size() + b.proj.b.size() +
         b.fc1.w.size() + b.fc1.b.size() + b.fc2.w.size() + b.fc2.b.size() + b.ls1.size() + b.ls2.size();
  return n;
}

FeatureMap upsample_semantic(const FeatureMap& X, int factor, int rows, int cols) {
  require(factor >= 1, "upsample_semantic: factor must be positive");
  require(X.channels() > 0 && X.height() > 0 && X.width() > 0, "upsample_semantic: empty feature map");
  require(rows >= 1 && cols >= 1 && rows <= X.height() * factor && cols <= X.width() * factor,
          "upsample_semantic: target extent does not fit the upsampled grid");
  const int sh = X.height(), sw = X.width();
  std::vector<int> y0(rows), y1(rows), x0(cols), x1(cols);
  std::vector<double> fy(rows), fx(cols);
  for (int y = 0; y < rows; ++y) {
    const double s = std::clamp((y + 0.5) / factor - 0.5, 0.0, sh - 1.0);
    y0[y] = static_cast<int>(s);
    y1[y] = std::min(y0[y] + 1, sh - 1);
    fy[y] = s - y0[y];
  }
  for (int x = 0; x < cols; ++x) {
    const double s = std::clamp((x + 0.5) / factor - 0.5, 0.0, sw - 1.0);
    x0[x] = static_cast<int>(s);
    x1[x] = std::min(x0[x] + 1, sw - 1);
    fx[x] = s - x0[x];
  }
  FeatureMap Z(X.channels(), rows, cols);
  for (int c = 0; c < X.channels(); ++c)
    for (int y = 0; y < rows; ++y)
      for (int x = 0; x < cols; ++x) {
        const double a = X(c, y0[y], x0[x]), b = X(c, y0[y], x1[x]);
        const double d = X(c, y1[y], x0[x]), e = X(c, y1[y], x1[x]);
        const double top = a + fx[x] * (b - a), bot = d + fx[x] * (e - d);
        Z(c, y, x) = top + fy[y] * (bot - top);
      }
  return Z;
}

}  // namespace dpct::videx
