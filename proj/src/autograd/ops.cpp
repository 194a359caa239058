#include "dpct/autograd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpct/core/blas.hpp"

namespace dpct::ag {

namespace {

void require_same_numel(const Var& a, const Var& b, const char* op) {
  require(a && b && a.numel() == b.numel(), std::string(op) + ": operand sizes differ");
}

void require_rank3(const Var& x, const char* op) {
  require(x && x.rank() == 3, std::string(op) + ": expected a (C, H, W) tensor");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class F, class DF>
Var unary(const Var& x, F f, DF df) {
  const auto xv = x.value();
  std::vector<double> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return make_result(x.shape(), std::move(y), {x}, [df](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i] * df(in.value[i], self.value[i]);
  });
}

void im2col(const double* x, int cin, int h, int w, int k, int pad, int ho, int wo, double* col) {
  const std::size_t p = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy + ky - pad;
          double* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0);
            continue;
          }
          const double* src = x + (static_cast<std::size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox + kx - pad;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
}

void col2im_add(const double* col, int cin, int h, int w, int k, int pad, int ho, int wo, double* x) {
  const std::size_t p = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy + ky - pad;
          if (iy < 0 || iy >= h) continue;
          double* dst = x + (static_cast<std::size_t>(c) * h + iy) * w;
          const double* src = row + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox + kx - pad;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
}

// Fixed 8-lane summation order: vectorizes without depending on pointer alignment.
double lane_dot(const double* a, const double* b, int n) {
  double lanes[8] = {};
  int i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) lanes[l] += a[i + l] * b[i + l];
  double s = ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_numel(a, b, "add");
  std::vector<double> y(a.value().begin(), a.value().end());
  const auto bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_numel(a, b, "sub");
  std::vector<double> y(a.value().begin(), a.value().end());
  const auto bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    Node& pa = *self.inputs[0];
    Node& pb = *self.inputs[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_numel(a, b, "mul");
  std::vector<double> y(a.value().begin(), a.value().end());
  const auto bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    Node& pa = *self.inputs[0];
    Node& pb = *self.inputs[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
  });
}

Var scale(const Var& a, double s) {
  std::vector<double> y(a.value().begin(), a.value().end());
  for (double& v : y) v *= s;
  return make_result(a.shape(), std::move(y), {a}, [s](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += s * self.grad[i];
  });
}

Var relu(const Var& x) {
  return unary(x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var silu(const Var& x) {
  return unary(
      x, [](double v) { return v * sigmoid(v); },
      [](double v, double) {
        const double s = sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Var softplus(const Var& x) {
  return unary(
      x, [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
      [](double v, double) { return sigmoid(v); });
}

Var neg_exp(const Var& x) {
  return unary(x, [](double v) { return -std::exp(v); }, [](double, double y) { return y; });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value()) s += v;
  return make_result({1}, {s}, {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    const double g = self.grad[0];
    for (double& gi : in.grad) gi += g;
  });
}

Var mean(const Var& x) {
  require(x.numel() > 0, "mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Var mse(const Var& a, const Var& b) {
  require_same_numel(a, b, "mse");
  require(a.numel() > 0, "mse: empty tensor");
  const auto av = a.value();
  const auto bv = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(av.size());
  return make_result({1}, {s * inv_n}, {a, b}, [inv_n](Node& self) {
    Node& pa = *self.inputs[0];
    Node& pb = *self.inputs[1];
    const double g = 2.0 * inv_n * self.grad[0];
    for (std::size_t i = 0; i < pa.value.size(); ++i) {
      const double d = g * (pa.value[i] - pb.value[i]);
      if (pa.requires_grad) pa.grad[i] += d;
      if (pb.requires_grad) pb.grad[i] -= d;
    }
  });
}

Var charbonnier(const Var& a, const Var& b, double eps) {
  require_same_numel(a, b, "charbonnier");
  require(eps > 0.0, "charbonnier: eps must be positive");
  require(a.numel() > 0, "charbonnier: empty tensor");
  const auto av = a.value();
  const auto bv = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += std::sqrt(d * d + eps * eps);
  }
  const double inv_n = 1.0 / static_cast<double>(av.size());
  return make_result({1}, {s * inv_n}, {a, b}, [inv_n, eps](Node& self) {
    Node& pa = *self.inputs[0];
    Node& pb = *self.inputs[1];
    const double g = inv_n * self.grad[0];
    for (std::size_t i = 0; i < pa.value.size(); ++i) {
      const double d = pa.value[i] - pb.value[i];
      const double gd = g * d / std::sqrt(d * d + eps * eps);
      if (pa.requires_grad) pa.grad[i] += gd;
      if (pb.requires_grad) pb.grad[i] -= gd;
    }
  });
}

Var mul_channel(const Var& x, const Var& s) {
  require_rank3(x, "mul_channel");
  require(s && s.numel() == static_cast<std::size_t>(x.dim(0)), "mul_channel: scale length must equal channels");
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  std::vector<double> y(x.value().begin(), x.value().end());
  const auto sv = s.value();
  for (int ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < plane; ++i) y[ch * plane + i] *= sv[ch];
  return make_result(x.shape(), std::move(y), {x, s}, [c, plane](Node& self) {
    Node& px = *self.inputs[0];
    Node& ps = *self.inputs[1];
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t j = ch * plane + i;
        if (px.requires_grad) px.grad[j] += self.grad[j] * ps.value[ch];
        acc += self.grad[j] * px.value[j];
      }
      if (ps.requires_grad) ps.grad[ch] += acc;
    }
  });
}

Var add_channel(const Var& x, const Var& b) {
  require_rank3(x, "add_channel");
  require(b && b.numel() == static_cast<std::size_t>(x.dim(0)), "add_channel: bias length must equal channels");
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  std::vector<double> y(x.value().begin(), x.value().end());
  const auto bv = b.value();
  for (int ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < plane; ++i) y[ch * plane + i] += bv[ch];
  return make_result(x.shape(), std::move(y), {x, b}, [c, plane](Node& self) {
    Node& px = *self.inputs[0];
    Node& pb = *self.inputs[1];
    if (px.requires_grad)
      for (std::size_t j = 0; j < self.grad.size(); ++j) px.grad[j] += self.grad[j];
    if (pb.requires_grad)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += self.grad[ch * plane + i];
        pb.grad[ch] += acc;
      }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& bias, int pad) {
  require_rank3(x, "conv2d");
  require(w && w.rank() == 4 && w.dim(2) == w.dim(3), "conv2d: weight must be (Cout, Cin, k, k)");
  const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int cout = w.dim(0), k = w.dim(2);
  require(w.dim(1) == cin, "conv2d: weight input channels do not match the input");
  require(!bias || bias.numel() == static_cast<std::size_t>(cout), "conv2d: bias length must equal Cout");
  require(pad >= 0, "conv2d: negative padding");
  const int ho = h + 2 * pad - k + 1, wo = wd + 2 * pad - k + 1;
  require(ho > 0 && wo > 0, "conv2d: kernel larger than padded input");
  const int kk = cin * k * k;
  const std::size_t p = static_cast<std::size_t>(ho) * wo;
  const bool direct = (k == 1 && pad == 0);

  std::vector<double> col;
  const double* colp = x.value().data();
  if (!direct) {
    col.resize(static_cast<std::size_t>(kk) * p);
    im2col(x.value().data(), cin, h, wd, k, pad, ho, wo, col.data());
    colp = col.data();
  }
  std::vector<double> y(static_cast<std::size_t>(cout) * p, 0.0);
  if (bias) {
    const auto bv = bias.value();
    for (int o = 0; o < cout; ++o) std::fill(y.begin() + o * p, y.begin() + (o + 1) * p, bv[o]);
  }
  blas::gemm(false, false, cout, static_cast<int>(p), kk, 1.0, w.value().data(), kk, colp, static_cast<int>(p), 1.0,
             y.data(), static_cast<int>(p));

  std::vector<Var> inputs{x, w};
  if (bias) inputs.push_back(bias);
  return make_result({cout, ho, wo}, std::move(y), std::move(inputs),
                     [=](Node& self) {
                       Node& px = *self.inputs[0];
                       Node& pw = *self.inputs[1];
                       const int pi = static_cast<int>(p);
                       if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
                         Node& pb = *self.inputs[2];
                         for (int o = 0; o < cout; ++o) {
                           double acc = 0.0;
                           for (std::size_t i = 0; i < p; ++i) acc += self.grad[o * p + i];
                           pb.grad[o] += acc;
                         }
                       }
                       if (pw.requires_grad) {
                         std::vector<double> c2;
                         const double* cp = px.value.data();
                         if (!direct) {
                           c2.resize(static_cast<std::size_t>(kk) * p);
                           im2col(px.value.data(), cin, h, wd, k, pad, ho, wo, c2.data());
                           cp = c2.data();
                         }
                         blas::gemm(false, true, cout, kk, pi, 1.0, self.grad.data(), pi, cp, pi, 1.0, pw.grad.data(), kk);
                       }
                       if (px.requires_grad) {
                         if (direct) {
                           blas::gemm(true, false, kk, pi, cout, 1.0, pw.value.data(), kk, self.grad.data(), pi, 1.0,
                                      px.grad.data(), pi);
                         } else {
                           std::vector<double> gcol(static_cast<std::size_t>(kk) * p);
                           blas::gemm(true, false, kk, pi, cout, 1.0, pw.value.data(), kk, self.grad.data(), pi, 0.0,
                                      gcol.data(), pi);
                           col2im_add(gcol.data(), cin, h, wd, k, pad, ho, wo, px.grad.data());
                         }
                       }
                     });
}

Var depthwise_conv2d(const Var& x, const Var& w, const Var& bias, int pad) {
  require_rank3(x, "depthwise_conv2d");
  const int c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  require(w && w.rank() == 4 && w.dim(0) == c && w.dim(1) == 1 && w.dim(2) == w.dim(3),
          "depthwise_conv2d: weight must be (C, 1, k, k)");
  require(!bias || bias.numel() == static_cast<std::size_t>(c), "depthwise_conv2d: bias length must equal C");
  const int k = w.dim(2);
  const int ho = h + 2 * pad - k + 1, wo = wd + 2 * pad - k + 1;
  require(ho > 0 && wo > 0, "depthwise_conv2d: kernel larger than padded input");
  const auto xv = x.value();
  const auto wv = w.value();
  std::vector<double> y(static_cast<std::size_t>(c) * ho * wo, 0.0);
  // Tap-major loops over contiguous output spans keep the inner loops vectorizable.
  for (int ch = 0; ch < c; ++ch) {
    const double* xs = xv.data() + static_cast<std::size_t>(ch) * h * wd;
    const double* ws = wv.data() + static_cast<std::size_t>(ch) * k * k;
    double* ys = y.data() + static_cast<std::size_t>(ch) * ho * wo;
    std::fill(ys, ys + static_cast<std::size_t>(ho) * wo, bias ? bias.value()[ch] : 0.0);
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double wt = ws[ky * k + kx];
        const int ox0 = std::max(0, pad - kx), ox1 = std::min(wo, wd + pad - kx);
        for (int oy = std::max(0, pad - ky); oy < std::min(ho, h + pad - ky); ++oy) {
          const double* xr = xs + static_cast<std::size_t>(oy + ky - pad) * wd + (kx - pad);
          double* yr = ys + static_cast<std::size_t>(oy) * wo;
          for (int ox = ox0; ox < ox1; ++ox) yr[ox] += wt * xr[ox];
        }
      }
  }
  std::vector<Var> inputs{x, w};
  if (bias) inputs.push_back(bias);
  return make_result({c, ho, wo}, std::move(y), std::move(inputs), [=](Node& self) {
    Node& px = *self.inputs[0];
    Node& pw = *self.inputs[1];
    Node* pb = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
    for (int ch = 0; ch < c; ++ch) {
      const double* xs = px.value.data() + static_cast<std::size_t>(ch) * h * wd;
      const double* ws = pw.value.data() + static_cast<std::size_t>(ch) * k * k;
      const double* gs = self.grad.data() + static_cast<std::size_t>(ch) * ho * wo;
      double* gx = px.requires_grad ? px.grad.data() + static_cast<std::size_t>(ch) * h * wd : nullptr;
      double* gw = pw.requires_grad ? pw.grad.data() + static_cast<std::size_t>(ch) * k * k : nullptr;
      if (pb && pb->requires_grad) {
        double gb = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(ho) * wo; ++i) gb += gs[i];
        pb->grad[ch] += gb;
      }
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const double wt = ws[ky * k + kx];
          const int ox0 = std::max(0, pad - kx), ox1 = std::min(wo, wd + pad - kx);
          double acc = 0.0;
          for (int oy = std::max(0, pad - ky); oy < std::min(ho, h + pad - ky); ++oy) {
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(oy + ky - pad) * wd + (kx - pad);
            const double* gr = gs + static_cast<std::size_t>(oy) * wo;
            if (gx) {
              double* gxr = gx + off;
              for (int ox = ox0; ox < ox1; ++ox) gxr[ox] += wt * gr[ox];
            }
            if (gw && ox1 > ox0) acc += lane_dot(gr + ox0, xs + off + ox0, ox1 - ox0);
          }
          if (gw) gw[ky * k + kx] += acc;
        }
    }
  });
}

Var maxpool2(const Var& x) {
  require_rank3(x, "maxpool2");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int ho = h / 2, wo = w / 2;
  require(ho > 0 && wo > 0, "maxpool2: input smaller than 2x2");
  const auto xv = x.value();
  std::vector<double> y(static_cast<std::size_t>(c) * ho * wo);
  std::vector<std::size_t> arg(y.size());
  for (int ch = 0; ch < c; ++ch)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        std::size_t best = (static_cast<std::size_t>(ch) * h + 2 * oy) * w + 2 * ox;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t j = (static_cast<std::size_t>(ch) * h + 2 * oy + dy) * w + 2 * ox + dx;
            if (xv[j] > xv[best]) best = j;
          }
        const std::size_t o = (static_cast<std::size_t>(ch) * ho + oy) * wo + ox;
        y[o] = xv[best];
        arg[o] = best;
      }
  return make_result({c, ho, wo}, std::move(y), {x}, [arg = std::move(arg)](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t o = 0; o < arg.size(); ++o) in.grad[arg[o]] += self.grad[o];
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_channels: no inputs");
  const int h = parts[0].dim(1), w = parts[0].dim(2);
  int c = 0;
  for (const auto& p : parts) {
    require_rank3(p, "concat_channels");
    require(p.dim(1) == h && p.dim(2) == w, "concat_channels: spatial extents differ");
    c += p.dim(0);
  }
  std::vector<double> y;
  y.reserve(static_cast<std::size_t>(c) * h * w);
  for (const auto& p : parts) y.insert(y.end(), p.value().begin(), p.value().end());
  return make_result({c, h, w}, std::move(y), parts, [](Node& self) {
    std::size_t off = 0;
    for (auto& in : self.inputs) {
      if (in->requires_grad)
        for (std::size_t i = 0; i < in->value.size(); ++i) in->grad[i] += self.grad[off + i];
      off += in->value.size();
    }
  });
}

Var slice_channels(const Var& x, int begin, int count) {
  require_rank3(x, "slice_channels");
  require(begin >= 0 && count >= 0 && begin + count <= x.dim(0), "slice_channels: range out of bounds");
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  const std::size_t off = begin * plane;
  std::vector<double> y(x.value().begin() + off, x.value().begin() + off + count * plane);
  return make_result({count, x.dim(1), x.dim(2)}, std::move(y), {x}, [off](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[off + i] += self.grad[i];
  });
}

Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require_rank3(x, "layer_norm_channels");
  const int c = x.dim(0);
  require(gamma.numel() == static_cast<std::size_t>(c) && beta.numel() == static_cast<std::size_t>(c),
          "layer_norm_channels: affine length must equal channels");
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  const auto xv = x.value();
  const auto gv = gamma.value();
  const auto bv = beta.value();
  std::vector<double> xhat(xv.size()), rstd(plane), y(xv.size());
  for (std::size_t p = 0; p < plane; ++p) {
    double m = 0.0;
    for (int ch = 0; ch < c; ++ch) m += xv[ch * plane + p];
    m /= c;
    double v = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double d = xv[ch * plane + p] - m;
      v += d * d;
    }
    v /= c;
    const double r = 1.0 / std::sqrt(v + eps);
    rstd[p] = r;
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t j = ch * plane + p;
      xhat[j] = (xv[j] - m) * r;
      y[j] = gv[ch] * xhat[j] + bv[ch];
    }
  }
  return make_result(x.shape(), std::move(y), {x, gamma, beta},
                     [c, plane, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
                       Node& px = *self.inputs[0];
                       Node& pg = *self.inputs[1];
                       Node& pb = *self.inputs[2];
                       for (std::size_t p = 0; p < plane; ++p) {
                         double mg = 0.0, mgx = 0.0;
                         for (int ch = 0; ch < c; ++ch) {
                           const std::size_t j = ch * plane + p;
                           const double gy = self.grad[j];
                           if (pg.requires_grad) pg.grad[ch] += gy * xhat[j];
                           if (pb.requires_grad) pb.grad[ch] += gy;
                           const double gh = gy * pg.value[ch];
                           mg += gh;
                           mgx += gh * xhat[j];
                         }
                         if (!px.requires_grad) continue;
                         mg /= c;
                         mgx /= c;
                         for (int ch = 0; ch < c; ++ch) {
                           const std::size_t j = ch * plane + p;
                           const double gh = self.grad[j] * pg.value[ch];
                           px.grad[j] += rstd[p] * (gh - mg - xhat[j] * mgx);
                         }
                       }
                     });
}

Var gray_to_rgb_normalized(const Var& x, const std::array<double, 3>& mean, const std::array<double, 3>& std) {
  require_rank3(x, "gray_to_rgb_normalized");
  require(x.dim(0) == 1, "gray_to_rgb_normalized: expected one channel");
  const std::size_t plane = x.numel();
  std::vector<double> y(3 * plane);
  const auto xv = x.value();
  for (int ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < plane; ++i) y[ch * plane + i] = (xv[i] - mean[ch]) / std[ch];
  return make_result({3, x.dim(1), x.dim(2)}, std::move(y), {x}, [plane, std](Node& self) {
    Node& in = *self.inputs[0];
    for (int ch = 0; ch < 3; ++ch)
      for (std::size_t i = 0; i < plane; ++i) in.grad[i] += self.grad[ch * plane + i] / std[ch];
  });
}

}  // namespace dpct::ag
