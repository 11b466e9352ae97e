#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "localprop/errors.hpp"
#include "localprop/harness.hpp"

namespace localprop {
namespace {

constexpr char kMagic[8] = {'L', 'P', 'C', 'K', 'P', 'T', 0, 0};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kByteOrderMark = 0x01020304;

class Writer {
 public:
  void raw(const void* p, std::size_t n) { bytes_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
  void text(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void matrix(const Matrix& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  Reader(std::string bytes, std::string origin) : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(bytes_[pos_++])} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(bytes_[pos_++])} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string text() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Matrix matrix() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    need(std::size_t{rows} * cols * 8);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    return m;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw TruncatedFileError(origin_ + ": checkpoint is truncated");
  }
  std::string bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.params.validate();
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(kByteOrderMark);
  w.text(ckpt.config);
  w.u32(static_cast<std::uint32_t>(ckpt.epoch));
  w.u32(static_cast<std::uint32_t>(ckpt.params.layout));
  w.u32(static_cast<std::uint32_t>(ckpt.params.depth()));
  for (int i = 0; i < ckpt.params.depth(); ++i) {
    const Layer& layer = ckpt.params.layers[i];
    w.u32(static_cast<std::uint32_t>(layer.activation));
    w.matrix(layer.weights);
    w.matrix(layer.bias);
    w.matrix(ckpt.params.feedback[i]);
  }
  // write to a sibling then rename so a crash never leaves a half-written file
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}), path.string());
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw BadMagicError(path.string() + ": not a checkpoint");
  if (const auto v = r.u32(); v != kVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(v));
  }
  if (r.u32() != kByteOrderMark) throw DataError(path.string() + ": byte-order mark mismatch");
  Checkpoint ckpt;
  ckpt.config = r.text();
  ckpt.epoch = static_cast<int>(r.u32());
  const std::uint32_t layout = r.u32();
  if (layout > static_cast<std::uint32_t>(FeedbackLayout::Direct)) throw DataError(path.string() + ": bad layout");
  ckpt.params.layout = static_cast<FeedbackLayout>(layout);
  const std::uint32_t depth = r.u32();
  for (std::uint32_t i = 0; i < depth; ++i) {
    Layer layer;
    const std::uint32_t act = r.u32();
    if (act > static_cast<std::uint32_t>(Activation::Identity)) throw DataError(path.string() + ": bad activation");
    layer.activation = static_cast<Activation>(act);
    layer.weights = r.matrix();
    const Matrix bias = r.matrix();
    if (bias.cols() != 1) throw DataError(path.string() + ": bias is not a column");
    layer.bias = bias.col(0);
    ckpt.params.layers.push_back(std::move(layer));
    ckpt.params.feedback.push_back(r.matrix());
  }
  if (!r.done()) throw DataError(path.string() + ": trailing bytes after checkpoint");
  ckpt.params.validate();
  return ckpt;
}

}  // namespace localprop
