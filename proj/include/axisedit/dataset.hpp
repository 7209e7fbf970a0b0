#pragma once

// Write-once latent datasets on disk:
//   {prefix}.manifest.json   manifest (JSON)
//   {prefix}.f32             rows of little-endian float32, count x layers x dim
//   {prefix}.labels          optional, one byte per row (0 = Male, 1 = Female)
// The manifest carries the CRC-64/XZ of the payload as 16 hex digits.

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axisedit/label.hpp"
#include "axisedit/latent.hpp"

namespace axisedit {

enum class Space { W, Wplus };

struct DatasetManifest {
  std::string name;
  Space space = Space::W;
  std::int64_t dim = 0;
  std::int64_t layers = 1;
  std::int64_t count = 0;
  bool labels_present = false;
  std::string checksum;
  std::string created;

  std::int64_t row_size() const { return dim * layers; }
};

std::string manifest_path(const std::string& prefix);
std::string payload_path(const std::string& prefix);
std::string labels_path(const std::string& prefix);

/// CRC-64/XZ (ECMA-182 polynomial, reflected, all-ones init and xor-out).
class Crc64 {
 public:
  void update(const void* data, std::size_t n);
  std::uint64_t value() const { return ~state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = ~std::uint64_t{0};
};

/// Streams rows to disk; the manifest is written by finish().
class DatasetWriter {
 public:
  DatasetWriter(std::string prefix, Space space, std::int64_t dim, std::int64_t layers, bool with_labels,
                std::string created);
  ~DatasetWriter();

  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  /// `row` is layers * dim values, block-major.
  void append(std::span<const double> row, std::optional<Label> label = std::nullopt);
  void append(const ExtendedLatent& v, std::optional<Label> label = std::nullopt);
  void append(const LatentVector& v, std::optional<Label> label = std::nullopt);
  DatasetManifest finish();

 private:
  std::string prefix_;
  DatasetManifest manifest_;
  std::ofstream payload_;
  std::ofstream labels_;
  Crc64 crc_;
  std::vector<unsigned char> buffer_;
  bool finished_ = false;
};

/// Writes a whole dataset. `rows` hold layers * dim values each; `labels`
/// is either empty or one per row.
DatasetManifest write_dataset(const std::string& prefix, Space space, std::int64_t dim, std::int64_t layers,
                              std::span<const Eigen::VectorXd> rows, std::span<const Label> labels,
                              const std::string& created);

/// Streaming reader. Construction validates the manifest against the
/// payload (length and checksum) without keeping the payload in memory.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& prefix);

  const DatasetManifest& manifest() const { return manifest_; }

  /// Reads the next row into `row` (resized to layers * dim). Returns false
  /// at the end of the dataset.
  bool next(Eigen::VectorXd& row, std::optional<Label>* label = nullptr);
  void rewind();

  /// Row reshaped into per-layer blocks.
  ExtendedLatent as_extended(const Eigen::VectorXd& row) const;

 private:
  std::string prefix_;
  DatasetManifest manifest_;
  std::ifstream payload_;
  std::ifstream labels_;
  std::vector<unsigned char> buffer_;
  std::int64_t position_ = 0;
};

/// Reads every row into memory (convenience for tests and small data).
struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<Eigen::VectorXd> rows;
  std::vector<Label> labels;
};
LoadedDataset load_dataset(const std::string& prefix);

DatasetManifest read_manifest(const std::string& prefix);
std::string to_string(Space s);

}  // namespace axisedit
