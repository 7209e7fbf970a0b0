#pragma once

// The contract behind which the generator, the encoder and the attribute
// classifier live. The engine only sees opaque image handles.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "axisedit/label.hpp"
#include "axisedit/latent.hpp"

namespace axisedit {

struct ImageHandle {
  std::string id;

  friend bool operator==(const ImageHandle&, const ImageHandle&) = default;
};

struct SexLabel {
  Label label = Label::Female;
  double confidence = 0.5;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual Geometry geometry() const = 0;
  /// Latent of an image (inversion).
  virtual ExtendedLatent encode(const ImageHandle& img) = 0;
  /// Image generated from a latent.
  virtual ImageHandle decode(const ExtendedLatent& v) = 0;
  virtual SexLabel classify_sex(const ImageHandle& img) = 0;
};

/// Re-encoding distortion applied by the mock to the axis component.
struct ResponseCurve {
  enum class Kind { Identity, Linear, Tanh };
  Kind kind = Kind::Identity;
  double a = 1.0;
  double b = 0.0;
  double c = 1.0;

  static ResponseCurve identity() { return {}; }
  static ResponseCurve linear(double gain) { return {Kind::Linear, gain, 0.0, 1.0}; }
  static ResponseCurve tanh(double a, double b, double c) { return {Kind::Tanh, a, b, c}; }

  /// Identity: x; Linear: a x; Tanh: a x + b tanh(c x).
  double operator()(double x) const;
  /// Throws unless the curve is finite and strictly increasing.
  void validate() const;
};

std::string_view to_string(ResponseCurve::Kind k);

/// Mean and spread of one synthetic class along the true axis.
struct ClassCluster {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Synthetic world simulated by MockBackend.
struct MockWorld {
  Geometry geometry;
  Eigen::VectorXd true_axis;
  ResponseCurve response;
  double theta = 0.0;
  std::uint64_t seed = 0;
  // Used by the data synthesizer only.
  ClassCluster male{-0.96, 1.38};
  ClassCluster female{-5.70, 1.35};
  double orthogonal_sigma = 1.0;
  double male_fraction = 0.5;

  /// Unit axis drawn deterministically from `seed`.
  static Eigen::VectorXd random_axis(Eigen::Index dim, std::uint64_t seed);
  void validate() const;
};

/// Parses the mock configuration document
/// {dim, layers, response: {kind, a, b, c}, theta, seed, ...}.
MockWorld load_mock_world(const std::string& path);
MockWorld parse_mock_world(const std::string& json_text);

/// Deterministic in-process stand-in for the generator/encoder pair. Images
/// are stored latents; encoding recovers the stored latent and replaces its
/// mean score on the true axis S by response(S), leaving every orthogonal
/// component untouched.
class MockBackend final : public ModelBackend {
 public:
  explicit MockBackend(MockWorld world);

  Geometry geometry() const override { return world_.geometry; }
  ExtendedLatent encode(const ImageHandle& img) override;
  ImageHandle decode(const ExtendedLatent& v) override;
  SexLabel classify_sex(const ImageHandle& img) override;

  const MockWorld& world() const { return world_; }
  /// Mean per-block projection of the stored latent on the true axis.
  double true_score(const ImageHandle& img) const;
  /// Latent stored for a handle, exactly as decoded.
  ExtendedLatent stored(const ImageHandle& img) const;

 private:
  const ExtendedLatent& lookup(const ImageHandle& img) const;

  MockWorld world_;
  mutable std::mutex mu_;
  std::map<std::string, ExtendedLatent> images_;
  std::uint64_t next_id_ = 0;
};

/// Client for a model server running as a child process, speaking
/// newline-delimited JSON on its standard input/output:
///   request  {"op": "encode"|"decode"|"classify", "id": "...", "payload": {...}}
///   response {"id": "...", "ok": true, "result": {...}}
///          | {"id": "...", "ok": false, "error": {"code": "...", "message": "..."}}
/// One request is in flight at a time.
class ExternalBackend final : public ModelBackend {
 public:
  /// Spawns `command` through /bin/sh.
  ExternalBackend(const std::string& command, Geometry geometry);
  ~ExternalBackend() override;

  ExternalBackend(const ExternalBackend&) = delete;
  ExternalBackend& operator=(const ExternalBackend&) = delete;

  Geometry geometry() const override { return geometry_; }
  ExtendedLatent encode(const ImageHandle& img) override;
  ImageHandle decode(const ExtendedLatent& v) override;
  SexLabel classify_sex(const ImageHandle& img) override;

 private:
  struct Process;
  std::string round_trip(const std::string& request_line);

  Geometry geometry_;
  std::unique_ptr<Process> proc_;
  std::uint64_t next_request_ = 0;
  std::mutex mu_;
};

/// Serves `backend` over the line protocol above until `in` reaches EOF.
void serve_backend(ModelBackend& backend, std::istream& in, std::ostream& out);

/// Handles one request line and returns the response line (no newline).
std::string handle_request(ModelBackend& backend, const std::string& line);

}  // namespace axisedit
