#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "localprop/data.hpp"
#include "localprop/errors.hpp"

namespace localprop {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.images.resize(static_cast<Eigen::Index>(indices.size()), images.cols());
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw DimensionError("subset index " + std::to_string(indices[k]) + " out of range");
    out.images.row(static_cast<Eigen::Index>(k)) = images.row(static_cast<Eigen::Index>(indices[k]));
    out.labels.push_back(labels[indices[k]]);
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t epoch_seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (spec.validation_count >= n) {
    throw ConfigError("validation_count " + std::to_string(spec.validation_count) + " must be below dataset size " +
                      std::to_string(n));
  }
  const auto order = epoch_order(n, spec.seed);
  const auto cut = static_cast<std::ptrdiff_t>(n - spec.validation_count);
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + cut);
  s.validation.assign(order.begin() + cut, order.end());
  // keep each split in file order; only membership is random
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds.size(), spec);
  return {ds.subset(idx.train), ds.subset(idx.validation)};
}

Matrix one_hot(std::span<const std::uint8_t> labels, int classes) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= classes) throw DimensionError("label " + std::to_string(labels[k]) + " exceeds class count");
    y(static_cast<Eigen::Index>(k), labels[k]) = 1.0;
  }
  return y;
}

EpochBatches::EpochBatches(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed)
    : ds_(&ds), batch_size_(batch_size), order_(epoch_order(ds.size(), epoch_seed)) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  count_ = (ds.size() + batch_size - 1) / batch_size;
}

Batch EpochBatches::operator[](std::size_t k) const {
  const std::size_t begin = k * batch_size_;
  const std::size_t end = std::min(begin + batch_size_, order_.size());
  Batch b;
  b.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(end));
  b.x.resize(static_cast<Eigen::Index>(b.indices.size()), ds_->images.cols());
  std::vector<std::uint8_t> labels;
  labels.reserve(b.indices.size());
  for (std::size_t r = 0; r < b.indices.size(); ++r) {
    b.x.row(static_cast<Eigen::Index>(r)) = ds_->images.row(static_cast<Eigen::Index>(b.indices[r]));
    labels.push_back(ds_->labels[b.indices[r]]);
  }
  b.y = one_hot(labels);
  return b;
}

std::uint64_t checksum(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  for (Eigen::Index r = 0; r < ds.images.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.images.cols(); ++c) {
      // pixels are k/255 exactly; hash the byte they came from
      mix(static_cast<std::uint64_t>(std::lround(ds.images(r, c) * 255.0)));
    }
  }
  for (auto l : ds.labels) mix(l);
  return h;
}

}  // namespace localprop
