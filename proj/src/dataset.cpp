#include "axisedit/dataset.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <json.hpp>

namespace axisedit {

using nlohmann::json;

namespace {

// Reflected ECMA-182 polynomial.
constexpr std::uint64_t kCrcPoly = 0xC96C5795D7870F42ULL;

constexpr std::array<std::uint64_t, 256> make_crc_table() {
  std::array<std::uint64_t, 256> t{};
  for (std::uint64_t i = 0; i < 256; ++i) {
    std::uint64_t r = i;
    for (int k = 0; k < 8; ++k) r = (r & 1) ? (r >> 1) ^ kCrcPoly : r >> 1;
    t[i] = r;
  }
  return t;
}

constexpr auto kCrcTable = make_crc_table();

void put_f32_le(unsigned char* out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int i = 0; i < 4; ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

double get_f32_le(const unsigned char* in) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return static_cast<double>(std::bit_cast<float>(bits));
}

Space parse_space(const std::string& s) {
  if (s == "W") return Space::W;
  if (s == "Wplus") return Space::Wplus;
  throw DatasetError("manifest: unknown space '" + s + "'");
}

json manifest_to_json(const DatasetManifest& m) {
  return json{{"name", m.name},
              {"space", to_string(m.space)},
              {"dim", m.dim},
              {"layers", m.layers},
              {"count", m.count},
              {"labels_present", m.labels_present},
              {"dtype", "float32-le"},
              {"checksum", m.checksum},
              {"created", m.created}};
}

void validate_shape(const DatasetManifest& m) {
  if (m.dim <= 0) throw DatasetError("manifest: dim must be positive");
  if (m.layers < 1) throw DatasetError("manifest: layers must be >= 1");
  if (m.count < 0) throw DatasetError("manifest: count must be >= 0");
  if (m.space == Space::W && m.layers != 1) throw DatasetError("manifest: W datasets have exactly one layer");
}

}  // namespace

std::string to_string(Space s) { return s == Space::W ? "W" : "Wplus"; }

std::string manifest_path(const std::string& prefix) { return prefix + ".manifest.json"; }
std::string payload_path(const std::string& prefix) { return prefix + ".f32"; }
std::string labels_path(const std::string& prefix) { return prefix + ".labels"; }

void Crc64::update(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) state_ = kCrcTable[(state_ ^ p[i]) & 0xff] ^ (state_ >> 8);
}

std::string Crc64::hex() const {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << value();
  return os.str();
}

DatasetWriter::DatasetWriter(std::string prefix, Space space, std::int64_t dim, std::int64_t layers, bool with_labels,
                             std::string created)
    : prefix_(std::move(prefix)) {
  manifest_.name = std::filesystem::path(prefix_).filename().string();
  manifest_.space = space;
  manifest_.dim = dim;
  manifest_.layers = layers;
  manifest_.labels_present = with_labels;
  manifest_.created = std::move(created);
  validate_shape(manifest_);

  payload_.open(payload_path(prefix_), std::ios::binary | std::ios::trunc);
  if (!payload_) throw DatasetError("cannot create " + payload_path(prefix_));
  if (with_labels) {
    labels_.open(labels_path(prefix_), std::ios::binary | std::ios::trunc);
    if (!labels_) throw DatasetError("cannot create " + labels_path(prefix_));
  } else {
    std::filesystem::remove(labels_path(prefix_));
  }
  buffer_.resize(static_cast<std::size_t>(manifest_.row_size()) * 4);
}

DatasetWriter::~DatasetWriter() = default;

void DatasetWriter::append(std::span<const double> row, std::optional<Label> label) {
  if (finished_) throw DatasetError("dataset writer: already finished");
  if (static_cast<std::int64_t>(row.size()) != manifest_.row_size()) {
    throw DimensionError("dataset writer: row has " + std::to_string(row.size()) + " values, expected " +
                         std::to_string(manifest_.row_size()));
  }
  if (manifest_.labels_present != label.has_value()) {
    throw DatasetError(manifest_.labels_present ? "dataset writer: label required" : "dataset writer: dataset is unlabeled");
  }
  for (std::size_t i = 0; i < row.size(); ++i) put_f32_le(buffer_.data() + 4 * i, row[i]);
  payload_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  crc_.update(buffer_.data(), buffer_.size());
  if (label) {
    const char byte = static_cast<char>(*label);
    labels_.write(&byte, 1);
  }
  if (!payload_ || (label && !labels_)) throw DatasetError("dataset writer: write failure");
  ++manifest_.count;
}

void DatasetWriter::append(const ExtendedLatent& v, std::optional<Label> label) {
  const auto& b = v.blocks();
  append(std::span<const double>(b.data(), static_cast<std::size_t>(b.size())), label);
}

void DatasetWriter::append(const LatentVector& v, std::optional<Label> label) {
  append(std::span<const double>(v.values().data(), static_cast<std::size_t>(v.dim())), label);
}

DatasetManifest DatasetWriter::finish() {
  if (finished_) return manifest_;
  payload_.close();
  if (labels_.is_open()) labels_.close();
  if (payload_.fail() || labels_.fail()) throw DatasetError("dataset writer: write failure on close");
  manifest_.checksum = crc_.hex();
  std::ofstream m(manifest_path(prefix_), std::ios::trunc);
  m << manifest_to_json(manifest_).dump(2) << '\n';
  if (!m) throw DatasetError("cannot write " + manifest_path(prefix_));
  finished_ = true;
  return manifest_;
}

DatasetManifest write_dataset(const std::string& prefix, Space space, std::int64_t dim, std::int64_t layers,
                              std::span<const Eigen::VectorXd> rows, std::span<const Label> labels,
                              const std::string& created) {
  if (!labels.empty() && labels.size() != rows.size()) throw DatasetError("write_dataset: label count differs from row count");
  DatasetWriter w(prefix, space, dim, layers, !labels.empty(), created);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    w.append(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())),
             labels.empty() ? std::nullopt : std::optional<Label>(labels[i]));
  }
  return w.finish();
}

DatasetManifest read_manifest(const std::string& prefix) {
  std::ifstream in(manifest_path(prefix));
  if (!in) throw DatasetError("cannot open " + manifest_path(prefix));
  try {
    const json j = json::parse(in);
    DatasetManifest m;
    m.name = j.at("name").get<std::string>();
    m.space = parse_space(j.at("space").get<std::string>());
    m.dim = j.at("dim").get<std::int64_t>();
    m.layers = j.at("layers").get<std::int64_t>();
    m.count = j.at("count").get<std::int64_t>();
    m.labels_present = j.at("labels_present").get<bool>();
    m.checksum = j.at("checksum").get<std::string>();
    m.created = j.value("created", std::string());
    if (j.value("dtype", std::string("float32-le")) != "float32-le") throw DatasetError("manifest: unsupported dtype");
    validate_shape(m);
    return m;
  } catch (const json::exception& e) {
    throw DatasetError("manifest " + manifest_path(prefix) + ": " + e.what());
  }
}

DatasetReader::DatasetReader(const std::string& prefix) : prefix_(prefix), manifest_(read_manifest(prefix)) {
  const auto expected = static_cast<std::uintmax_t>(manifest_.count) * static_cast<std::uintmax_t>(manifest_.row_size()) * 4;
  std::error_code ec;
  const auto actual = std::filesystem::file_size(payload_path(prefix), ec);
  if (ec) throw DatasetError("cannot stat " + payload_path(prefix));
  if (actual != expected) {
    throw DatasetError("payload length " + std::to_string(actual) + " bytes does not match manifest (" +
                       std::to_string(expected) + " bytes for " + std::to_string(manifest_.count) + " rows)");
  }
  if (manifest_.labels_present) {
    const auto label_bytes = std::filesystem::file_size(labels_path(prefix), ec);
    if (ec) throw DatasetError("cannot stat " + labels_path(prefix));
    if (label_bytes != static_cast<std::uintmax_t>(manifest_.count)) throw DatasetError("label file length does not match manifest");
  }

  payload_.open(payload_path(prefix), std::ios::binary);
  if (!payload_) throw DatasetError("cannot open " + payload_path(prefix));
  Crc64 crc;
  std::vector<char> chunk(1 << 16);
  while (payload_) {
    payload_.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    crc.update(chunk.data(), static_cast<std::size_t>(payload_.gcount()));
  }
  if (crc.hex() != manifest_.checksum) {
    throw ChecksumError("checksum mismatch for " + payload_path(prefix) + ": manifest " + manifest_.checksum +
                        ", payload " + crc.hex());
  }
  if (manifest_.labels_present) {
    labels_.open(labels_path(prefix), std::ios::binary);
    if (!labels_) throw DatasetError("cannot open " + labels_path(prefix));
  }
  buffer_.resize(static_cast<std::size_t>(manifest_.row_size()) * 4);
  rewind();
}

void DatasetReader::rewind() {
  payload_.clear();
  payload_.seekg(0);
  if (labels_.is_open()) {
    labels_.clear();
    labels_.seekg(0);
  }
  position_ = 0;
}

bool DatasetReader::next(Eigen::VectorXd& row, std::optional<Label>* label) {
  if (position_ >= manifest_.count) return false;
  payload_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (payload_.gcount() != static_cast<std::streamsize>(buffer_.size())) throw DatasetError("truncated payload");
  row.resize(manifest_.row_size());
  for (Eigen::Index i = 0; i < row.size(); ++i) row[i] = get_f32_le(buffer_.data() + 4 * i);
  if (label) {
    label->reset();
    if (manifest_.labels_present) {
      char byte = 0;
      if (!labels_.get(byte)) throw DatasetError("truncated label file");
      if (byte != 0 && byte != 1) throw DatasetError("label file: invalid label byte");
      *label = static_cast<Label>(byte);
    }
  } else if (manifest_.labels_present) {
    labels_.ignore(1);
  }
  ++position_;
  return true;
}

ExtendedLatent DatasetReader::as_extended(const Eigen::VectorXd& row) const {
  return ExtendedLatent(Eigen::Map<const ExtendedLatent::Blocks>(row.data(), manifest_.layers, manifest_.dim));
}

LoadedDataset load_dataset(const std::string& prefix) {
  DatasetReader reader(prefix);
  LoadedDataset out;
  out.manifest = reader.manifest();
  out.rows.reserve(static_cast<std::size_t>(out.manifest.count));
  Eigen::VectorXd row;
  std::optional<Label> label;
  while (reader.next(row, &label)) {
    out.rows.push_back(row);
    if (label) out.labels.push_back(*label);
  }
  return out;
}

}  // namespace axisedit
