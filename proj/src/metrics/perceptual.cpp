#include "dpct/metrics/perceptual.hpp"

#include <algorithm>
#include <cmath>

#include "dpct/io/archive.hpp"

namespace dpct::metrics {

namespace {

constexpr double kNormEps = 1e-10;
constexpr double kDistsC1 = 1e-6;
constexpr double kDistsC2 = 1e-6;
constexpr int kDistsChannels = 3 + 64 + 128 + 256 + 512 + 512;

std::vector<FeatureMap> taps(const dprlf::Vgg16& backbone, const Image& img) {
  ag::NoGradGuard guard;
  std::vector<FeatureMap> out;
  for (const ag::Var& f : backbone.features(ag::Var::from(img))) out.push_back(f.to_feature_map());
  return out;
}

void require_pair(const Image& x, const Image& y, const char* who) {
  require(!x.empty() && x.same_shape(y), std::string(who) + ": images must be non-empty and equally shaped");
}

const io::TensorRecord& tensor(const io::Archive& ar, const std::string& name, const std::filesystem::path& path) {
  auto it = ar.tensors.find(name);
  if (it == ar.tensors.end()) throw LoadError("calibration: missing tensor '" + name + "' in " + path.string());
  return it->second;
}

}  // namespace

PerceptualCalibration PerceptualCalibration::load(const std::filesystem::path& path) {
  const io::Archive ar = io::load_archive(path);
  PerceptualCalibration c;
  for (int k = 0; k < dprlf::Vgg16::kBlocks; ++k) {
    const auto& t = tensor(ar, "lin" + std::to_string(k) + ".model.1.weight", path);
    const int ch = dprlf::Vgg16::block_channels(k + 1);
    if (t.values.size() != static_cast<std::size_t>(ch))
      throw LoadError("calibration: lin" + std::to_string(k) + " must hold " + std::to_string(ch) + " weights");
    c.weights[k] = t.values;
  }
  return c;
}

double perceptual_distance(const dprlf::Vgg16& backbone, const Image& x, const Image& y,
                           const PerceptualCalibration& calibration) {
  require_pair(x, y, "perceptual_distance");
  const auto fx = taps(backbone, x), fy = taps(backbone, y);
  double total = 0.0;
  for (std::size_t k = 0; k < fx.size(); ++k) {
    const FeatureMap& a = fx[k];
    const FeatureMap& b = fy[k];
    const std::size_t plane = a.plane();
    double layer = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
      double na = 0.0, nb = 0.0;
      for (int c = 0; c < a.channels(); ++c) {
        na += a.data()[c * plane + p] * a.data()[c * plane + p];
        nb += b.data()[c * plane + p] * b.data()[c * plane + p];
      }
      na = std::sqrt(na) + kNormEps;
      nb = std::sqrt(nb) + kNormEps;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.data()[c * plane + p] / na - b.data()[c * plane + p] / nb;
        layer += (calibration.calibrated() ? calibration.weights[k][c] : 1.0) * d * d;
      }
    }
    total += layer / static_cast<double>(plane);
  }
  return total;
}

DistsWeights DistsWeights::load(const std::filesystem::path& path) {
  const io::Archive ar = io::load_archive(path);
  DistsWeights w{tensor(ar, "alpha", path).values, tensor(ar, "beta", path).values};
  if (w.alpha.size() != kDistsChannels || w.beta.size() != kDistsChannels)
    throw LoadError("calibration: alpha and beta must each hold " + std::to_string(kDistsChannels) + " weights");
  double sum = 0.0;
  for (std::size_t i = 0; i < w.alpha.size(); ++i) sum += w.alpha[i] + w.beta[i];
  if (!(sum > 0)) throw LoadError("calibration: alpha and beta must have a positive sum");
  for (double& v : w.alpha) v /= sum;
  for (double& v : w.beta) v /= sum;
  return w;
}

DistsBreakdown dists_breakdown(const dprlf::Vgg16& backbone, const Image& x, const Image& y,
                               const DistsWeights& weights) {
  require_pair(x, y, "dists");
  std::vector<FeatureMap> fx{FeatureMap(3, x.rows(), x.cols())}, fy{FeatureMap(3, y.rows(), y.cols())};
  for (int c = 0; c < 3; ++c) {
    std::copy(x.data().begin(), x.data().end(), fx[0].channel(c).begin());
    std::copy(y.data().begin(), y.data().end(), fy[0].channel(c).begin());
  }
  for (auto& f : taps(backbone, x)) fx.push_back(std::move(f));
  for (auto& f : taps(backbone, y)) fy.push_back(std::move(f));

  const double uniform = 0.5 / kDistsChannels;
  DistsBreakdown out;
  double distance = 0.0;
  int index = 0;
  for (std::size_t k = 0; k < fx.size(); ++k) {
    const FeatureMap& a = fx[k];
    const FeatureMap& b = fy[k];
    const double n = static_cast<double>(a.plane());
    std::vector<double> mean_terms, cov_terms;
    for (int c = 0; c < a.channels(); ++c, ++index) {
      const auto ca = a.channel(c), cb = b.channel(c);
      double ma = 0.0, mb = 0.0;
      for (std::size_t i = 0; i < ca.size(); ++i) {
        ma += ca[i];
        mb += cb[i];
      }
      ma /= n;
      mb /= n;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (std::size_t i = 0; i < ca.size(); ++i) {
        va += (ca[i] - ma) * (ca[i] - ma);
        vb += (cb[i] - mb) * (cb[i] - mb);
        cov += (ca[i] - ma) * (cb[i] - mb);
      }
      va /= n;
      vb /= n;
      cov /= n;
      const double s1 = (2 * ma * mb + kDistsC1) / (ma * ma + mb * mb + kDistsC1);
      const double s2 = (2 * cov + kDistsC2) / (va + vb + kDistsC2);
      const double alpha = weights.calibrated() ? weights.alpha[index] : uniform;
      const double beta = weights.calibrated() ? weights.beta[index] : uniform;
      distance += alpha * (1.0 - s1) + beta * (1.0 - s2);
      mean_terms.push_back(s1);
      cov_terms.push_back(s2);
    }
    out.mean_terms.push_back(std::move(mean_terms));
    out.covariance_terms.push_back(std::move(cov_terms));
  }
  out.similarity = 1.0 - distance;
  return out;
}

}  // namespace dpct::metrics
