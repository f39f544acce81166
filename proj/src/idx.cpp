#include "rfdyn/idx.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>

namespace rfdyn {

namespace {

std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open IDX file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::string& path) {
  if (bytes.size() < offset + 4) throw std::runtime_error("truncated IDX header: " + path);
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  const auto bytes = read_all(path);
  const std::uint32_t magic = be32(bytes, 0, path);
  if (magic != kIdxImageMagic) throw std::runtime_error("not an IDX image file (bad magic): " + path);
  IdxImages img;
  img.count = be32(bytes, 4, path);
  img.rows = be32(bytes, 8, path);
  img.cols = be32(bytes, 12, path);
  const std::size_t payload = std::size_t{img.count} * img.rows * img.cols;
  if (bytes.size() - 16 < payload) throw std::runtime_error("truncated IDX image payload: " + path);
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  const auto bytes = read_all(path);
  const std::uint32_t magic = be32(bytes, 0, path);
  if (magic != kIdxLabelMagic) throw std::runtime_error("not an IDX label file (bad magic): " + path);
  const std::uint32_t count = be32(bytes, 4, path);
  if (bytes.size() - 8 < count) throw std::runtime_error("truncated IDX label payload: " + path);
  return {bytes.begin() + 8, bytes.begin() + 8 + count};
}

void write_idx_images(const std::string& path, const IdxImages& images) {
  if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols)
    throw std::invalid_argument("write_idx_images: pixel count does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write IDX file: " + path);
  put_be32(out, kIdxImageMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write IDX file: " + path);
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const IdxImages img = read_idx_images(images_path);
  const auto labels = read_idx_labels(labels_path);
  if (labels.size() != img.count) throw std::runtime_error("IDX image and label counts differ");
  const Eigen::Index dim = static_cast<Eigen::Index>(img.rows) * img.cols;
  Dataset data;
  data.dim = static_cast<int>(dim);
  data.distribution = Distribution::External;
  data.points.resize(img.count, dim);
  data.targets.resize(img.count);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(img.count); ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) data.points(i, j) = img.pixels[static_cast<std::size_t>(i * dim + j)] / 255.0;
    data.targets(i) = labels[static_cast<std::size_t>(i)];
  }
  return data;
}

Dataset select_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.dim = data.dim;
  out.distribution = data.distribution;
  out.points.resize(static_cast<Eigen::Index>(rows.size()), data.points.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= data.size()) throw std::out_of_range("select_rows: index out of range");
    out.points.row(static_cast<Eigen::Index>(k)) = data.points.row(rows[k]);
    out.targets(static_cast<Eigen::Index>(k)) = data.targets(rows[k]);
  }
  return out;
}

Dataset filter_classes(const Dataset& data, const std::vector<int>& classes) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const int label = static_cast<int>(data.targets(i));
    if (std::find(classes.begin(), classes.end(), label) != classes.end()) keep.push_back(i);
  }
  return select_rows(data, keep);
}

Dataset subsample(const Dataset& data, Eigen::Index count, Rng& rng) {
  if (count < 0 || count > data.size()) throw std::invalid_argument("subsample: count exceeds dataset size");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // partial Fisher-Yates
  for (Eigen::Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Eigen::Index> pick(k, data.size() - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return select_rows(data, idx);
}

}  // namespace rfdyn
