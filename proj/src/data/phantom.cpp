#include "dpct/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dpct/core/rng.hpp"

namespace dpct::data {

namespace {

struct Ellipse {
  double cy, cx, ry, rx, angle, value;
  bool replace;  // set value instead of adding it
};

void paint(Image& img, const Ellipse& e) {
  const double ca = std::cos(e.angle), sa = std::sin(e.angle);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      const double dy = r - e.cy, dx = c - e.cx;
      const double u = (dx * ca + dy * sa) / e.rx;
      const double v = (-dx * sa + dy * ca) / e.ry;
      if (u * u + v * v <= 1.0) img(r, c) = e.replace ? e.value : img(r, c) + e.value;
    }
}

}  // namespace

Image disk_phantom(int rows, int cols, double radius, double value, double background) {
  Image img(rows, cols, background);
  const double cy = 0.5 * (rows - 1), cx = 0.5 * (cols - 1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (std::hypot(r - cy, c - cx) <= radius) img(r, c) = value;
  return img;
}

Image body_phantom(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xB0D7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };

  Image img(rows, cols, -1000.0);
  const double cy = 0.5 * (rows - 1) + uni(-0.03, 0.03) * rows;
  const double cx = 0.5 * (cols - 1) + uni(-0.03, 0.03) * cols;
  const double by = 0.40 * rows * uni(0.85, 1.0), bx = 0.46 * cols * uni(0.85, 1.0);

  paint(img, {cy, cx, by, bx, uni(-0.1, 0.1), uni(20.0, 60.0), true});                  // body
  paint(img, {cy, cx, by * 0.93, bx * 0.93, 0.0, uni(-80.0, -60.0), false});           // subcutaneous fat ring
  paint(img, {cy, cx, by * 0.86, bx * 0.86, 0.0, uni(60.0, 80.0), false});
  for (int side : {-1, 1})                                                              // lungs
    paint(img, {cy - 0.1 * by, cx + side * 0.45 * bx, 0.55 * by, 0.30 * bx, side * uni(0.1, 0.3),
                uni(-870.0, -780.0), true});
  paint(img, {cy + 0.55 * by, cx, 0.16 * by, 0.16 * bx, 0.0, uni(900.0, 1300.0), true});   // spine
  paint(img, {cy + 0.55 * by, cx, 0.07 * by, 0.07 * bx, 0.0, uni(200.0, 300.0), true});
  paint(img, {cy + 0.05 * by, cx, 0.22 * by, 0.18 * bx, uni(-0.3, 0.3), uni(30.0, 50.0), true});  // heart
  const int n_lesions = 2 + static_cast<int>(u01(rng) * 3);
  for (int i = 0; i < n_lesions; ++i) {
    const double ly = cy + uni(-0.5, 0.5) * by, lx = cx + uni(-0.6, 0.6) * bx;
    const double lr = uni(0.03, 0.08) * std::min(rows, cols);
    paint(img, {ly, lx, lr, lr * uni(0.7, 1.3), uni(0.0, 3.0), uni(-40.0, 80.0), false});
  }
  for (double& v : img.data()) v = std::clamp(v, -1024.0, 3071.0);
  return img;
}

}  // namespace dpct::data
