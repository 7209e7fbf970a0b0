#include "axisedit/backend.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

namespace axisedit {

using nlohmann::json;

double ResponseCurve::operator()(double x) const {
  switch (kind) {
    case Kind::Identity:
      return x;
    case Kind::Linear:
      return a * x;
    case Kind::Tanh:
      return a * x + b * std::tanh(c * x);
  }
  return x;
}

void ResponseCurve::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) throw InvalidArgument("response: non-finite parameter");
  switch (kind) {
    case Kind::Identity:
      break;
    case Kind::Linear:
      if (!(a > 0.0)) throw InvalidArgument("response: linear gain must be > 0");
      break;
    case Kind::Tanh:
      if (!(a > 0.0) || b < 0.0 || !(c > 0.0)) throw InvalidArgument("response: tanh requires a > 0, b >= 0, c > 0");
      break;
  }
}

std::string_view to_string(ResponseCurve::Kind k) {
  switch (k) {
    case ResponseCurve::Kind::Identity:
      return "identity";
    case ResponseCurve::Kind::Linear:
      return "linear";
    case ResponseCurve::Kind::Tanh:
      return "tanh";
  }
  return "identity";
}

Eigen::VectorXd MockWorld::random_axis(Eigen::Index dim, std::uint64_t seed) {
  if (dim <= 0) throw DimensionError("mock world: dim must be positive");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(dim);
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
  } while (!(v.norm() > 0.0));
  return v.normalized();
}

void MockWorld::validate() const {
  if (geometry.dim <= 0 || geometry.layers <= 0) throw InvalidArgument("mock world: dim and layers must be positive");
  detail::require_same_dim(true_axis.size(), geometry.dim, "mock world true axis");
  if (!true_axis.allFinite() || std::abs(true_axis.norm() - 1.0) > 1e-9) {
    throw InvalidArgument("mock world: true axis must be a finite unit vector");
  }
  response.validate();
  if (!std::isfinite(theta)) throw InvalidArgument("mock world: theta must be finite");
  for (const auto& c : {male, female}) {
    if (!std::isfinite(c.mu) || !(c.sigma >= 0.0)) throw InvalidArgument("mock world: bad class cluster");
  }
  if (!(orthogonal_sigma >= 0.0)) throw InvalidArgument("mock world: orthogonal_sigma must be >= 0");
  if (!(male_fraction >= 0.0 && male_fraction <= 1.0)) throw InvalidArgument("mock world: male_fraction outside [0, 1]");
}

MockWorld parse_mock_world(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("mock config: ") + e.what());
  }
  try {
    MockWorld w;
    w.geometry.dim = j.value("dim", kDefaultDim);
    w.geometry.layers = j.value("layers", kDefaultLayers);
    w.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("response")) {
      const auto& r = j.at("response");
      const std::string kind = r.value("kind", std::string("identity"));
      if (kind == "identity") {
        w.response = ResponseCurve::identity();
      } else if (kind == "linear") {
        w.response = ResponseCurve::linear(r.at("a").get<double>());
      } else if (kind == "tanh") {
        w.response = ResponseCurve::tanh(r.at("a").get<double>(), r.at("b").get<double>(), r.at("c").get<double>());
      } else {
        throw InvalidArgument("mock config: unknown response kind '" + kind + "'");
      }
    }
    if (j.contains("classes")) {
      const auto& c = j.at("classes");
      if (c.contains("male")) w.male = {c["male"].at("mu").get<double>(), c["male"].at("sigma").get<double>()};
      if (c.contains("female")) w.female = {c["female"].at("mu").get<double>(), c["female"].at("sigma").get<double>()};
    }
    w.theta = j.value("theta", 0.5 * (w.male.mu + w.female.mu));
    w.orthogonal_sigma = j.value("orthogonal_sigma", 1.0);
    w.male_fraction = j.value("male_fraction", 0.5);
    if (j.contains("true_axis")) {
      const auto raw = j.at("true_axis").get<std::vector<double>>();
      w.true_axis = Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size())).normalized();
    } else {
      w.true_axis = MockWorld::random_axis(w.geometry.dim, w.seed);
    }
    w.validate();
    return w;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("mock config: ") + e.what());
  }
}

MockWorld load_mock_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("mock config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mock_world(ss.str());
}

MockBackend::MockBackend(MockWorld world) : world_(std::move(world)) { world_.validate(); }

const ExtendedLatent& MockBackend::lookup(const ImageHandle& img) const {
  auto it = images_.find(img.id);
  if (it == images_.end()) throw UnknownImageError("unknown image '" + img.id + "'");
  return it->second;
}

ExtendedLatent MockBackend::stored(const ImageHandle& img) const {
  std::lock_guard lock(mu_);
  return lookup(img);
}

double MockBackend::true_score(const ImageHandle& img) const {
  std::lock_guard lock(mu_);
  return (lookup(img).blocks() * world_.true_axis).mean();
}

ExtendedLatent MockBackend::encode(const ImageHandle& img) {
  ExtendedLatent::Blocks blocks = stored(img).blocks();
  const double s = (blocks * world_.true_axis).mean();
  const double shift = world_.response(s) - s;
  if (shift != 0.0) blocks.rowwise() += shift * world_.true_axis.transpose();
  return ExtendedLatent(std::move(blocks));
}

ImageHandle MockBackend::decode(const ExtendedLatent& v) {
  if (v.geometry() != world_.geometry) {
    throw DimensionError("mock decode: latent is " + std::to_string(v.layers()) + "x" + std::to_string(v.dim()) +
                         ", backend expects " + std::to_string(world_.geometry.layers) + "x" +
                         std::to_string(world_.geometry.dim));
  }
  std::lock_guard lock(mu_);
  std::ostringstream id;
  id << "mock-" << std::setw(6) << std::setfill('0') << next_id_++;
  images_.insert_or_assign(id.str(), v);
  return {id.str()};
}

SexLabel MockBackend::classify_sex(const ImageHandle& img) {
  const double s = true_score(img);
  const double distance = std::abs(s - world_.theta);
  // Ties go to Female.
  return {s > world_.theta ? Label::Male : Label::Female, 1.0 / (1.0 + std::exp(-distance))};
}

}  // namespace axisedit
