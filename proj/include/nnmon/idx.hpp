#pragma once

#include "nnmon/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nnmon {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Raw IDX image tensor (count x rows x cols unsigned bytes, row-major).
struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

/// Images normalized to [0, 1] (byte / 255), one row per sample.
struct LabeledDataset {
  std::string name;
  Matrix inputs;
  std::vector<int> labels;
  std::uint32_t image_rows = 0;
  std::uint32_t image_cols = 0;

  Index size() const { return inputs.rows(); }
};

/// Readers accept plain or gzip-compressed files.
IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);

/// Throws FormatError on bad magic or truncation, ConsistencyError on count mismatch.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        std::string name = {});

void write_idx_images(const std::string& path, const IdxImages& images);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

/// Rows [begin, end) of a dataset, in order.
LabeledDataset slice(const LabeledDataset& data, Index begin, Index end);

}  // namespace nnmon
