#pragma once

#include "dpct/core/tensor.hpp"

namespace dpct::metrics {

struct PiqeResult {
  double score = 0.0;  // lower is better
  int n_blocks = 0;      // 16x16 blocks considered (after replicate padding to a block multiple)
  int n_active = 0;      // blocks above the spatial-activity threshold
  int n_distorted = 0;   // active blocks flagged for noticeable artifacts or noise
};

/// Perception-based no-reference quality estimate of a [0, data_range] grayscale image.
/// score = 100 (sum of distorted-block scores + 1) / (n_active + 1).
PiqeResult piqe_details(const Image& img, double data_range = 1.0);
inline double piqe(const Image& img, double data_range = 1.0) { return piqe_details(img, data_range).score; }

}  // namespace dpct::metrics
