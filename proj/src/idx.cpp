#include "nnmon/idx.hpp"

#include "nnmon/errors.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <memory>

namespace nnmon {

namespace {

// gzread passes uncompressed files through unchanged.
std::vector<std::uint8_t> read_all(const std::string& path) {
  std::unique_ptr<gzFile_s, int (*)(gzFile)> file(gzopen(path.c_str(), "rb"), gzclose);
  if (!file) throw FormatError(path, "cannot open file");
  std::vector<std::uint8_t> data;
  std::uint8_t buffer[1 << 16];
  for (;;) {
    const int n = gzread(file.get(), buffer, sizeof(buffer));
    if (n < 0) throw FormatError(path, "read error (corrupt compressed stream?)");
    if (n == 0) break;
    data.insert(data.end(), buffer, buffer + n);
  }
  return data;
}

std::uint32_t be32(const std::vector<std::uint8_t>& d, std::size_t offset) {
  return (std::uint32_t{d[offset]} << 24) | (std::uint32_t{d[offset + 1]} << 16) |
         (std::uint32_t{d[offset + 2]} << 8) | std::uint32_t{d[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

std::uint32_t check_magic(const std::vector<std::uint8_t>& d, const std::string& path,
                          std::uint32_t expected) {
  if (d.size() < 4) throw FormatError(path, "file too short for an IDX header");
  const std::uint32_t magic = be32(d, 0);
  if (magic != expected) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "bad magic 0x%08X, expected 0x%08X", magic, expected);
    throw FormatError(path, buf);
  }
  return magic;
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  const auto d = read_all(path);
  check_magic(d, path, kIdxImageMagic);
  if (d.size() < 16) throw FormatError(path, "truncated IDX image header");
  IdxImages img;
  img.count = be32(d, 4);
  img.rows = be32(d, 8);
  img.cols = be32(d, 12);
  const std::uint64_t expected = 16 + std::uint64_t{img.count} * img.rows * img.cols;
  if (d.size() < expected) {
    throw FormatError(path, "truncated: expected " + std::to_string(expected) + " bytes, found " +
                                std::to_string(d.size()));
  }
  if (d.size() > expected) throw FormatError(path, "trailing bytes after image data");
  img.pixels.assign(d.begin() + 16, d.end());
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  const auto d = read_all(path);
  check_magic(d, path, kIdxLabelMagic);
  if (d.size() < 8) throw FormatError(path, "truncated IDX label header");
  const std::uint64_t expected = 8 + std::uint64_t{be32(d, 4)};
  if (d.size() < expected) {
    throw FormatError(path, "truncated: expected " + std::to_string(expected) + " bytes, found " +
                                std::to_string(d.size()));
  }
  if (d.size() > expected) throw FormatError(path, "trailing bytes after label data");
  return {d.begin() + 8, d.end()};
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        std::string name) {
  const IdxImages img = read_idx_images(images_path);
  const auto labels = read_idx_labels(labels_path);
  if (labels.size() != img.count) {
    throw ConsistencyError(images_path + " holds " + std::to_string(img.count) + " images but " +
                           labels_path + " holds " + std::to_string(labels.size()) + " labels");
  }
  LabeledDataset data;
  data.name = name.empty() ? images_path : std::move(name);
  data.image_rows = img.rows;
  data.image_cols = img.cols;
  const Index d0 = static_cast<Index>(img.rows) * img.cols;
  data.inputs.resize(img.count, d0);
  for (Index i = 0; i < static_cast<Index>(img.count); ++i) {
    for (Index j = 0; j < d0; ++j) {
      data.inputs(i, j) = img.pixels[static_cast<std::size_t>(i * d0 + j)] / 255.0;
    }
  }
  data.labels.assign(labels.begin(), labels.end());
  return data;
}

void write_idx_images(const std::string& path, const IdxImages& images) {
  if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols) {
    throw ConsistencyError("pixel buffer does not match the image dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path, "cannot open for writing");
  put_be32(out, kIdxImageMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path, "cannot open for writing");
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

LabeledDataset slice(const LabeledDataset& data, Index begin, Index end) {
  if (begin < 0 || end > data.size() || begin > end) {
    throw ParameterError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside dataset of size " + std::to_string(data.size()));
  }
  LabeledDataset out;
  out.name = data.name;
  out.image_rows = data.image_rows;
  out.image_cols = data.image_cols;
  out.inputs = data.inputs.middleRows(begin, end - begin);
  out.labels.assign(data.labels.begin() + begin, data.labels.begin() + end);
  return out;
}

}  // namespace nnmon
