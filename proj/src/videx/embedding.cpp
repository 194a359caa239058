#include "dpct/videx/embedding.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dpct/core/rng.hpp"
#include "dpct/io/png.hpp"
#include "json.hpp"

namespace dpct::videx {

std::vector<double> pooled_embedding(const SemanticEncoder& encoder, const Image& unit) {
  const FeatureMap X = encoder(unit);
  std::vector<double> v(static_cast<std::size_t>(X.channels()), 0.0);
  const std::size_t plane = X.plane();
  for (int c = 0; c < X.channels(); ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += X.data()[c * plane + i];
    v[c] = s / static_cast<double>(plane);
  }
  return v;
}

EmbeddingAnalysis embed_analysis(const std::vector<data::PairedSample>& pairs, const SemanticEncoder& encoder) {
  require(pairs.size() >= 2, "embed_analysis: at least two pairs are required");
  EmbeddingAnalysis a;
  for (const auto& p : pairs) {
    data::validate(p);
    a.ld.push_back(pooled_embedding(encoder, data::hu_to_unit(p.ldct.pixels)));
    a.hd.push_back(pooled_embedding(encoder, data::hu_to_unit(p.hdct.pixels)));
  }
  const int n = static_cast<int>(pairs.size()) * 2, d = static_cast<int>(a.ld[0].size());
  Eigen::MatrixXd M(n, d);
  for (int i = 0; i < n / 2; ++i)
    for (int j = 0; j < d; ++j) {
      M(2 * i, j) = a.ld[i][j];
      M(2 * i + 1, j) = a.hd[i][j];
    }
  const Eigen::RowVectorXd mu = M.colwise().mean();
  M.rowwise() -= mu;
  const Eigen::MatrixXd cov = (M.transpose() * M) / std::max(1, n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::MatrixXd basis(d, 2);
  for (int k = 0; k < 2; ++k) {
    const int col = d - 1 - k;  // eigenvalues ascend
    Eigen::VectorXd v = col >= 0 ? Eigen::VectorXd(es.eigenvectors().col(col)) : Eigen::VectorXd::Zero(d);
    // Deterministic sign: the largest-magnitude loading is positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(k) = v;
    a.explained_variance[k] = col >= 0 ? std::max(0.0, es.eigenvalues()(col)) : 0.0;
  }
  const Eigen::MatrixXd proj = M * basis;
  for (int i = 0; i < n; ++i) {
    const auto& pair = pairs[static_cast<std::size_t>(i / 2)];
    a.points.push_back({proj(i, 0), proj(i, 1), i % 2 == 0 ? "ld" : "hd", pair.hdct.patient_id, pair.hdct.slice_index});
  }
  return a;
}

double pair_consistency(const EmbeddingAnalysis& analysis, std::uint64_t seed) {
  const int n = static_cast<int>(analysis.ld.size());
  require(n >= 2, "pair_consistency: at least two pairs are required");
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  Rng rng = make_rng(seed, 0xC0DE);
  std::uniform_int_distribution<int> other(0, n - 2);
  int wins = 0;
  for (int i = 0; i < n; ++i) {
    int j = other(rng);
    if (j >= i) ++j;
    if (dist(analysis.ld[i], analysis.hd[i]) < dist(analysis.ld[i], analysis.hd[j])) ++wins;
  }
  return static_cast<double>(wins) / n;
}

void write_points_jsonl(const std::filesystem::path& path, const EmbeddingAnalysis& analysis) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& p : analysis.points)
    out << nlohmann::json{{"x", p.x}, {"y", p.y}, {"dose", p.dose}, {"patient_id", p.patient_id}, {"slice_index", p.slice_index}}.dump()
        << "\n";
}

void render_scatter_png(const std::filesystem::path& path, const EmbeddingAnalysis& analysis, int size) {
  require(size >= 32, "render_scatter_png: canvas too small");
  io::PngImage img;
  img.rows = img.cols = size;
  img.channels = 3;
  img.bit_depth = 8;
  img.samples.assign(static_cast<std::size_t>(size) * size * 3, 255);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : analysis.points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double margin = 0.08 * size, span = size - 2 * margin;
  const double sx = xmax > xmin ? span / (xmax - xmin) : 0.0, sy = ymax > ymin ? span / (ymax - ymin) : 0.0;
  auto to_px = [&](const EmbeddingPoint& p) {
    const double cx = sx > 0 ? margin + (p.x - xmin) * sx : 0.5 * size;
    const double cy = sy > 0 ? size - margin - (p.y - ymin) * sy : 0.5 * size;
    return std::pair{cx, cy};
  };
  auto put = [&](int r, int c, std::array<int, 3> rgb) {
    if (r < 0 || c < 0 || r >= size || c >= size) return;
    for (int k = 0; k < 3; ++k) img.samples[(static_cast<std::size_t>(r) * size + c) * 3 + k] = static_cast<std::uint16_t>(rgb[k]);
  };
  for (std::size_t i = 0; i + 1 < analysis.points.size(); i += 2) {
    const auto [x0, y0] = to_px(analysis.points[i]);
    const auto [x1, y1] = to_px(analysis.points[i + 1]);
    const int steps = static_cast<int>(std::ceil(std::hypot(x1 - x0, y1 - y0))) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double f = static_cast<double>(s) / steps;
      put(static_cast<int>(std::lround(y0 + f * (y1 - y0))), static_cast<int>(std::lround(x0 + f * (x1 - x0))), {190, 190, 190});
    }
  }
  for (const auto& p : analysis.points) {
    const auto [cx, cy] = to_px(p);
    const std::array<int, 3> rgb = p.dose == "ld" ? std::array{214, 39, 40} : std::array{31, 119, 180};
    for (int dy = -3; dy <= 3; ++dy)
      for (int dx = -3; dx <= 3; ++dx)
        if (dx * dx + dy * dy <= 9) put(static_cast<int>(std::lround(cy)) + dy, static_cast<int>(std::lround(cx)) + dx, rgb);
  }
  io::write_png(path, img);
}

}  // namespace dpct::videx
