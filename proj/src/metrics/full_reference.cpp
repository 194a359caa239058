#include "dpct/metrics/full_reference.hpp"

#include <algorithm>
#include <cmath>

namespace dpct::metrics {

namespace {

void require_same(const Image& x, const Image& y, const char* who) {
  require(!x.empty() && x.same_shape(y), std::string(who) + ": images must be non-empty and equally shaped");
}

Image multiply(const Image& a, const Image& b) {
  Image out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

Image scaled(const Image& a, double s) {
  Image out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Image decimate2(const Image& a) {
  Image out((a.rows() + 1) / 2, (a.cols() + 1) / 2);
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) = a(2 * r, 2 * c);
  return out;
}

}  // namespace

double psnr(const Image& x, const Image& y, double peak) {
  require_same(x, y, "psnr");
  require(peak > 0, "psnr: peak must be positive");
  double se = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data()[i] - y.data()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(x.size());
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / mse);
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  require(size >= 1 && size % 2 == 1, "gaussian_kernel: size must be odd and positive");
  require(sigma > 0, "gaussian_kernel: sigma must be positive");
  std::vector<double> k(static_cast<std::size_t>(size));
  const int h = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) sum += k[i] = std::exp(-0.5 * (i - h) * (i - h) / (sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

Image filter_valid(const Image& img, const std::vector<double>& kernel) {
  const int n = static_cast<int>(kernel.size());
  require(img.rows() >= n && img.cols() >= n, "filter_valid: image smaller than the filter window");
  const int rows = img.rows() - n + 1, cols = img.cols() - n + 1;
  Image horiz(img.rows(), cols);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += kernel[k] * img(r, c + k);
      horiz(r, c) = acc;
    }
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += kernel[k] * horiz(r + k, c);
      out(r, c) = acc;
    }
  return out;
}

Image ssim_map(const Image& x, const Image& y, const SsimConfig& cfg) {
  require_same(x, y, "ssim");
  require(x.rows() >= cfg.window && x.cols() >= cfg.window, "ssim: image smaller than the SSIM window");
  require(cfg.data_range > 0, "ssim: data range must be positive");
  const auto k = gaussian_kernel(cfg.window, cfg.sigma);
  const Image mx = filter_valid(x, k), my = filter_valid(y, k);
  const Image sxx = filter_valid(multiply(x, x), k), syy = filter_valid(multiply(y, y), k),
              sxy = filter_valid(multiply(x, y), k);
  const double c1 = (cfg.k1 * cfg.data_range) * (cfg.k1 * cfg.data_range);
  const double c2 = (cfg.k2 * cfg.data_range) * (cfg.k2 * cfg.data_range);
  Image out(mx.rows(), mx.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ux = mx.data()[i], uy = my.data()[i];
    const double vx = sxx.data()[i] - ux * ux, vy = syy.data()[i] - uy * uy, cxy = sxy.data()[i] - ux * uy;
    out.data()[i] = ((2 * ux * uy + c1) * (2 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return out;
}

double ssim(const Image& x, const Image& y, const SsimConfig& cfg) {
  const Image m = ssim_map(x, y, cfg);
  double s = 0.0;
  for (double v : m.data()) s += v;
  return s / static_cast<double>(m.size());
}

double vif_p(const Image& x, const Image& y, double data_range) {
  require_same(x, y, "vif_p");
  require(data_range > 0, "vif_p: data range must be positive");
  constexpr double kNoiseVar = 2.0, kEps = 1e-10;
  Image ref = scaled(x, 255.0 / data_range), dist = scaled(y, 255.0 / data_range);
  double num = 0.0, den = 0.0;
  for (int scale = 1; scale <= 4; ++scale) {
    const int n = (1 << (5 - scale)) + 1;
    const auto k = gaussian_kernel(n, n / 5.0);
    if (scale > 1) {
      ref = decimate2(filter_valid(ref, k));
      dist = decimate2(filter_valid(dist, k));
    }
    require(ref.rows() >= n && ref.cols() >= n, "vif_p: image too small for four scales");
    const Image m1 = filter_valid(ref, k), m2 = filter_valid(dist, k);
    const Image s11 = filter_valid(multiply(ref, ref), k), s22 = filter_valid(multiply(dist, dist), k),
                s12 = filter_valid(multiply(ref, dist), k);
    for (std::size_t i = 0; i < m1.size(); ++i) {
      const double u1 = m1.data()[i], u2 = m2.data()[i];
      double v1 = std::max(s11.data()[i] - u1 * u1, 0.0);
      const double v2 = std::max(s22.data()[i] - u2 * u2, 0.0);
      const double c12 = s12.data()[i] - u1 * u2;
      double g = 0.0, sv = v2;
      if (v1 < kEps) {
        v1 = 0.0;
      } else if (v2 >= kEps) {
        g = c12 / v1;
        sv = v2 - g * c12;
        if (g < 0) {
          g = 0.0;
          sv = v2;
        }
      } else {
        sv = 0.0;
      }
      sv = std::max(sv, 0.0);
      num += std::log10(1.0 + g * g * v1 / (sv + kNoiseVar));
      den += std::log10(1.0 + v1 / kNoiseVar);
    }
  }
  return den > 0.0 ? num / den : 1.0;
}

}  // namespace dpct::metrics
