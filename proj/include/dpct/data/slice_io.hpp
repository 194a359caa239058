#pragma once

#include <filesystem>

#include "dpct/data/ct_slice.hpp"

namespace dpct::data {

/// Slice files come in two flavours, both with an optional JSON sidecar at
/// `<stem>.json` carrying {rescale_slope, rescale_intercept, patient_id, slice_index}:
///   *.png  16-bit (or 8-bit) grayscale; HU = stored * slope + intercept. Without a
///          sidecar the stored value is taken as HU + 1024.
///   *.raw  headerless little-endian array; the sidecar is mandatory and adds
///          {rows, cols, dtype: int16|uint16|float32|float64}.
/// Missing files raise LoadError; anything that does not decode to a 2D array raises FormatError.
CTSlice load_slice(const std::filesystem::path& path);

/// Writes the slice plus sidecar. PNG output quantizes to integer HU; RAW output is float32.
void save_slice(const std::filesystem::path& path, const CTSlice& slice);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace dpct::data
