#pragma once

// IDX (MNIST) binary files: big-endian magic 0x00000803 for images and
// 0x00000801 for labels, followed by big-endian 32-bit dimension sizes.

#include <cstdint>
#include <string>
#include <vector>

#include "rfdyn/features.hpp"

namespace rfdyn {

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

/// Throws std::runtime_error on I/O failure, wrong magic or truncated payload.
IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);

void write_idx_images(const std::string& path, const IdxImages& images);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

/// Flattened images scaled by 1/255, labels as targets. Throws when the two
/// files disagree on the number of items.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Rows whose target is one of `classes`, in file order.
Dataset filter_classes(const Dataset& data, const std::vector<int>& classes);

/// `count` distinct rows chosen uniformly without replacement, kept in their
/// original relative order.
Dataset subsample(const Dataset& data, Eigen::Index count, Rng& rng);

/// The rows at the given indices, in the given order.
Dataset select_rows(const Dataset& data, const std::vector<Eigen::Index>& rows);

}  // namespace rfdyn
