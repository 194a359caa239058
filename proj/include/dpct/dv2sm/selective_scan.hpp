#pragma once

#include <array>
#include <span>
#include <vector>

#include "dpct/autograd/var.hpp"

namespace dpct::dv2sm {

/// Dense operands of one selective scan over E channels, N states and L positions.
/// Layouts: u, delta (E, L); A (E, N); B, C (N, L); D (E).
struct ScanOperands {
  int channels = 0;
  int states = 0;
  int length = 0;
  std::span<const double> u, delta, A, B, C, D;
};

/// Reference discretized recurrence, visiting positions in `order`:
///   h_t = exp(Δ_t A) h_{t-1} + Δ_t B_t u_t,   y_t = C_t · h_t + D u_t.
/// Output has the layout of u. Raises ArgumentError on Δ ≤ 0 or a non-permutation order.
std::vector<double> selective_scan_1d(const ScanOperands& op, std::span<const int> order);

/// The four SS2D scan orders over an H×W raster:
/// row-major forward, row-major backward, column-major forward, column-major backward.
std::array<std::vector<int>, 4> scan_orders(int height, int width);

/// Differentiable selective scan. u, delta: (E, H, W); A: (E, N); B, C: (N, H, W); D: (E).
/// `order` permutes the H·W raster positions.
ag::Var selective_scan(const ag::Var& u, const ag::Var& delta, const ag::Var& A, const ag::Var& B, const ag::Var& C,
                       const ag::Var& D, std::vector<int> order);

}  // namespace dpct::dv2sm
