#include <zlib.h>

#include <array>
#include <memory>

#include "localprop/data.hpp"
#include "localprop/errors.hpp"

namespace localprop {
namespace {

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};

// Reads a whole file; gzread passes uncompressed input through unchanged.
std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::unique_ptr<gzFile_s, GzCloser> f(gzopen(path.c_str(), "rb"));
  if (!f) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk{};
  for (;;) {
    const int n = gzread(f.get(), chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) throw DataError("read error in " + path.string());
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  return out;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset, const std::filesystem::path& path) {
  if (buf.size() < offset + 4) throw TruncatedFileError(path.string() + ": header is truncated");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

std::string hex(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xF];
  return s;
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  const std::uint32_t magic = read_be32(buf, 0, path);
  if (magic != kIdxImageMagic) {
    throw BadMagicError(path.string() + ": expected image magic " + hex(kIdxImageMagic) + ", found " + hex(magic));
  }
  IdxImages img;
  img.count = read_be32(buf, 4, path);
  img.rows = read_be32(buf, 8, path);
  img.cols = read_be32(buf, 12, path);
  const std::size_t expected = std::size_t{img.count} * img.rows * img.cols;
  if (buf.size() - 16 < expected) {
    throw TruncatedFileError(path.string() + ": " + std::to_string(buf.size() - 16) + " pixel bytes, header promises " +
                             std::to_string(expected));
  }
  img.pixels.assign(buf.begin() + 16, buf.begin() + 16 + static_cast<std::ptrdiff_t>(expected));
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  const std::uint32_t magic = read_be32(buf, 0, path);
  if (magic != kIdxLabelMagic) {
    throw BadMagicError(path.string() + ": expected label magic " + hex(kIdxLabelMagic) + ", found " + hex(magic));
  }
  const std::uint32_t count = read_be32(buf, 4, path);
  if (buf.size() - 8 < count) {
    throw TruncatedFileError(path.string() + ": " + std::to_string(buf.size() - 8) + " label bytes, header promises " +
                             std::to_string(count));
  }
  return {buf.begin() + 8, buf.begin() + 8 + count};
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::string name) {
  const IdxImages img = read_idx_images(images_path);
  auto labels = read_idx_labels(labels_path);
  if (labels.size() != img.count) {
    throw CountMismatchError(images_path.string() + " holds " + std::to_string(img.count) + " images but " +
                             labels_path.string() + " holds " + std::to_string(labels.size()) + " labels");
  }
  for (std::uint8_t l : labels) {
    if (l >= kNumClasses) throw DataError(labels_path.string() + ": label " + std::to_string(l) + " out of range");
  }
  const std::size_t dim = std::size_t{img.rows} * img.cols;
  Dataset ds;
  ds.name = std::move(name);
  ds.images.resize(img.count, static_cast<Eigen::Index>(dim));
  for (std::size_t n = 0; n < img.count; ++n) {
    for (std::size_t j = 0; j < dim; ++j) {
      ds.images(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) = img.pixels[n * dim + j] / 255.0;
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

DatasetFiles locate_dataset(const std::filesystem::path& dir) {
  auto pick = [&](const std::string& stem) {
    const auto plain = dir / stem;
    if (std::filesystem::exists(plain)) return plain;
    const auto gz = dir / (stem + ".gz");
    if (std::filesystem::exists(gz)) return gz;
    throw DataError("missing " + plain.string() + " (or .gz)");
  };
  return {pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"), pick("t10k-images-idx3-ubyte"),
          pick("t10k-labels-idx1-ubyte")};
}

}  // namespace localprop
