#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "localprop/linalg.hpp"

namespace localprop {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr int kNumClasses = 10;

// Images flattened row-major, one per row, pixel bytes divided by 255.
struct Dataset {
  Matrix images;
  std::vector<std::uint8_t> labels;
  std::string name;

  std::size_t size() const { return labels.size(); }
  Dataset subset(std::span<const std::size_t> indices) const;
};

// Raw IDX payloads. Gzip-compressed files are inflated transparently.
struct IdxImages {
  std::uint32_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;
};
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

// Throws BadMagicError, TruncatedFileError or CountMismatchError.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::string name = {});

// The standard file names under a dataset directory:
// {train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz]
struct DatasetFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};
DatasetFiles locate_dataset(const std::filesystem::path& dir);

struct SplitSpec {
  std::size_t validation_count = 2000;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Seeded permutation of 0..n-1; validation is its last validation_count entries.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

Matrix one_hot(std::span<const std::uint8_t> labels, int classes = kNumClasses);

// Deterministic permutation used to order one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t epoch_seed);

struct Batch {
  Matrix x;
  Matrix y;  // one-hot
  std::vector<std::size_t> indices;
};

// Mini-batches of one epoch in seeded shuffled order; the last batch may be short.
class EpochBatches {
 public:
  // Keeps a pointer to `ds`, which must outlive the batches.
  EpochBatches(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed);
  EpochBatches(Dataset&&, std::size_t, std::uint64_t) = delete;

  std::size_t size() const { return count_; }
  Batch operator[](std::size_t k) const;

  class iterator {
   public:
    iterator(const EpochBatches* owner, std::size_t k) : owner_(owner), k_(k) {}
    Batch operator*() const { return (*owner_)[k_]; }
    iterator& operator++() {
      ++k_;
      return *this;
    }
    bool operator==(const iterator& o) const { return k_ == o.k_; }

   private:
    const EpochBatches* owner_;
    std::size_t k_;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, count_}; }

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t count_;
};

// Order-sensitive FNV-1a digest of pixel values and labels.
std::uint64_t checksum(const Dataset& ds);

}  // namespace localprop
