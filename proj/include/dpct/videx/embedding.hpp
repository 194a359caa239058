#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dpct/data/ct_slice.hpp"
#include "dpct/videx/encoder.hpp"

namespace dpct::videx {

struct EmbeddingPoint {
  double x = 0.0;
  double y = 0.0;
  std::string dose;  // "ld" or "hd"
  std::string patient_id;
  int slice_index = 0;
};

struct EmbeddingAnalysis {
  std::vector<EmbeddingPoint> points;    // LD and HD point of pair i at 2i and 2i+1
  std::vector<std::vector<double>> ld;   // pooled embeddings, one per pair
  std::vector<std::vector<double>> hd;
  std::array<double, 2> explained_variance{0.0, 0.0};
};

/// Mean over all patch tokens of X.
std::vector<double> pooled_embedding(const SemanticEncoder& encoder, const Image& unit);

/// Pools LD and HD embeddings per pair and projects all of them onto the top two principal components.
EmbeddingAnalysis embed_analysis(const std::vector<data::PairedSample>& pairs, const SemanticEncoder& encoder);

/// Fraction of pairs whose LD embedding is closer to its own HD embedding than to a randomly
/// drawn other HD embedding (full embedding dimension).
double pair_consistency(const EmbeddingAnalysis& analysis, std::uint64_t seed);

/// One JSON object per line: {x, y, dose, patient_id, slice_index}.
void write_points_jsonl(const std::filesystem::path& path, const EmbeddingAnalysis& analysis);
/// RGB scatter plot: LD points red, HD points blue, pairs joined by grey lines.
void render_scatter_png(const std::filesystem::path& path, const EmbeddingAnalysis& analysis, int size = 512);

}  // namespace dpct::videx
