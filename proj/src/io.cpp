#include "axisedit/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "axisedit/dataset.hpp"

namespace axisedit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string weights_prefix(const std::string& header_path) {
  fs::path p(header_path);
  if (p.extension() != ".json") throw InvalidArgument("axis file must end in .json: " + header_path);
  p.replace_extension(".weights");
  return p.string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text << '\n';
  if (!out) throw Error("cannot write " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

}  // namespace

std::string save_axis(const std::string& path, const SvmModel& model, const AttributeAxis& axis) {
  detail::require_same_dim(model.weights.size(), axis.dim(), "save_axis");
  const std::string prefix = weights_prefix(path);
  DatasetWriter w(prefix, Space::W, model.weights.size(), 1, false, axis.meta().date);
  w.append(std::span<const double>(model.weights.data(), static_cast<std::size_t>(model.weights.size())));
  const auto manifest = w.finish();

  const double orientation = axis.direction().dot(model.weights) >= 0.0 ? 1.0 : -1.0;
  const json header{{"kind", "attribute_axis"},
                    {"dim", axis.dim()},
                    {"norm_raw", axis.norm_raw()},
                    {"bias", model.bias},
                    {"orientation", orientation},
                    {"hyperparams",
                     {{"lambda", model.hyperparams.lambda},
                      {"epochs", model.hyperparams.epochs},
                      {"seed", model.hyperparams.seed}}},
                    {"provenance", {{"training_size", model.training_size}, {"date", axis.meta().date}}},
                    {"weights", fs::path(prefix).filename().string()},
                    {"fingerprint", manifest.checksum}};
  write_text(path, header.dump(2));
  return manifest.checksum;
}

AxisFile load_axis(const std::string& path) {
  const json h = read_json(path);
  try {
    if (h.at("kind").get<std::string>() != "attribute_axis") throw InvalidArgument(path + ": not an axis file");
    const std::string prefix = (fs::path(path).parent_path() / h.at("weights").get<std::string>()).string();
    const auto data = load_dataset(prefix);
    if (data.rows.size() != 1) throw InvalidArgument(path + ": weight payload must hold exactly one row");
    if (data.manifest.checksum != h.at("fingerprint").get<std::string>()) {
      throw ChecksumError(path + ": weight payload does not match the header fingerprint");
    }

    SvmModel model;
    model.weights = data.rows.front();
    model.bias = h.at("bias").get<double>();
    const auto& hp = h.at("hyperparams");
    model.hyperparams = {hp.at("lambda").get<double>(), hp.at("epochs").get<std::int64_t>(),
                         hp.at("seed").get<std::uint64_t>()};
    model.training_size = h.at("provenance").at("training_size").get<std::int64_t>();

    AxisProvenance meta{model.training_size, model.hyperparams.lambda, model.hyperparams.epochs,
                        model.hyperparams.seed, h.at("provenance").value("date", std::string())};
    auto axis = AttributeAxis::from_raw(model.weights, std::move(meta));
    if (h.at("orientation").get<double>() < 0.0) axis = axis.flipped();
    return {std::move(model), std::move(axis), data.manifest.checksum};
  } catch (const json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

std::string distribution_to_json(const ClassDistribution& d) {
  return json{{"label", to_string(d.label)},
              {"mu", d.mu},
              {"sigma", d.sigma},
              {"lower", d.lower},
              {"upper", d.upper},
              {"n", d.n},
              {"degenerate", d.degenerate},
              {"axis_fingerprint", d.axis_fingerprint}}
      .dump(2);
}

ClassDistribution distribution_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    auto d = ClassDistribution::from_moments(parse_label(j.at("label").get<std::string>()), j.at("mu").get<double>(),
                                             j.at("sigma").get<double>(), j.at("n").get<std::int64_t>());
    d.axis_fingerprint = j.value("axis_fingerprint", std::string());
    if (j.contains("lower") && std::abs(j["lower"].get<double>() - d.lower) > 1e-9) {
      throw InvalidArgument("distribution: lower bound inconsistent with mu - 2 sigma");
    }
    if (j.contains("upper") && std::abs(j["upper"].get<double>() - d.upper) > 1e-9) {
      throw InvalidArgument("distribution: upper bound inconsistent with mu + 2 sigma");
    }
    return d;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("distribution: ") + e.what());
  }
}

void save_distribution(const std::string& path, const ClassDistribution& dist) {
  write_text(path, distribution_to_json(dist));
}

ClassDistribution load_distribution(const std::string& path) { return distribution_from_json(read_json(path).dump()); }

}  // namespace axisedit
