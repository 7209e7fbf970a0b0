#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "axisedit/backend.hpp"
#include "support.hpp"

using namespace axisedit;
using axisedit::testing::Gen;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

MockWorld small_world(ResponseCurve r, Eigen::Index dim = 16, Eigen::Index layers = 3) {
  MockWorld w;
  w.geometry = {dim, layers};
  w.true_axis = MockWorld::random_axis(dim, 5);
  w.response = r;
  w.theta = -3.3;
  return w;
}

// Latent whose every block has score `s` on the true axis plus orthogonal noise.
ExtendedLatent with_score(Gen& gen, const MockWorld& w, double s) {
  ExtendedLatent v = gen.extended(w.geometry.layers, w.geometry.dim);
  ExtendedLatent::Blocks b = v.blocks();
  const Eigen::VectorXd proj = b * w.true_axis;
  for (Eigen::Index i = 0; i < b.rows(); ++i) b.row(i) += (s - proj[i]) * w.true_axis.transpose();
  return ExtendedLatent(std::move(b));
}

double true_score(const MockWorld& w, const ExtendedLatent& v) { return (v.blocks() * w.true_axis).mean(); }

Eigen::MatrixXd off_axis(const MockWorld& w, const ExtendedLatent& v) {
  const Eigen::MatrixXd b = v.blocks();
  return b - (b * w.true_axis) * w.true_axis.transpose();
}

std::string write_config(const json& j) {
  static int counter = 0;
  const fs::path p = fs::temp_directory_path() / ("axisedit_mock_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".json");
  std::ofstream(p) << j.dump();
  return p.string();
}

}  // namespace

TEST_CASE("response curves") {
  CHECK(ResponseCurve::identity()(2.5) == 2.5);
  CHECK(ResponseCurve::linear(0.5)(2.0) == 1.0);
  CHECK(ResponseCurve::tanh(0.6, 0.8, 0.5)(1.0) == doctest::Approx(0.6 + 0.8 * std::tanh(0.5)).epsilon(1e-15));
  CHECK_THROWS_AS(ResponseCurve::linear(0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(ResponseCurve::linear(-1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(ResponseCurve::tanh(0.5, -0.1, 1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(ResponseCurve::tanh(0.5, 0.1, 0.0).validate(), InvalidArgument);
  CHECK_NOTHROW(ResponseCurve::tanh(0.5, 0.0, 1.0).validate());
}

TEST_CASE("mock encode/decode") {
  Gen gen(41);
  SUBCASE("identity round trip per entry") {
    MockBackend mock(small_world(ResponseCurve::identity(), 512, 18));
    const ExtendedLatent v = gen.extended(18, 512);
    const ExtendedLatent back = mock.encode(mock.decode(v));
    CHECK((back.blocks() - v.blocks()).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("linear 0.5 halves a score of 2") {
    const MockWorld w = small_world(ResponseCurve::linear(0.5));
    MockBackend mock(w);
    const ImageHandle img = mock.decode(with_score(gen, w, 2.0));
    CHECK(mock.true_score(img) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(true_score(w, mock.encode(img)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero latent decodes") {
    MockBackend mock(small_world(ResponseCurve::identity(), 512, 18));
    const ImageHandle img = mock.decode(ExtendedLatent::zero({512, 18}));
    CHECK(img.id == "mock-000000");
    CHECK(mock.encode(img).blocks().isZero(0.0));
  }
  SUBCASE("wrong geometry") {
    MockBackend mock(small_world(ResponseCurve::identity(), 512, 18));
    CHECK_THROWS_AS(mock.decode(ExtendedLatent::zero({100, 18})), DimensionError);
    CHECK_THROWS_AS(mock.decode(ExtendedLatent::zero({512, 1})), DimensionError);
  }
  SUBCASE("unknown image") {
    MockBackend mock(small_world(ResponseCurve::identity()));
    CHECK_THROWS_AS(mock.encode({"nope"}), UnknownImageError);
    CHECK_THROWS_AS(mock.classify_sex({"nope"}), UnknownImageError);
  }
}

TEST_CASE("mock classify_sex thresholds at theta") {
  Gen gen(42);
  const MockWorld w = small_world(ResponseCurve::identity());
  MockBackend mock(w);
  auto classify = [&](double s) { return mock.classify_sex(mock.decode(with_score(gen, w, s))); };

  CHECK(classify(-0.59).label == Label::Male);
  CHECK(classify(-3.3).label == Label::Female);
  const SexLabel f = classify(-5.70);
  CHECK(f.label == Label::Female);
  CHECK(f.confidence > 0.9);
  CHECK(f.confidence == doctest::Approx(1.0 / (1.0 + std::exp(-2.4))).epsilon(1e-9));
  CHECK(classify(-3.3 + 1e-6).label == Label::Male);
}

TEST_CASE("mock world configuration") {
  SUBCASE("defaults") {
    const MockWorld w = parse_mock_world(R"({"dim": 8, "layers": 2, "seed": 3})");
    CHECK(w.geometry == Geometry{8, 2});
    CHECK(w.response.kind == ResponseCurve::Kind::Identity);
    CHECK(w.theta == doctest::Approx(-3.33));
    CHECK(w.true_axis.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w.true_axis == MockWorld::random_axis(8, 3));
    CHECK(w.true_axis != MockWorld::random_axis(8, 4));
  }
  SUBCASE("explicit fields") {
    const MockWorld w = parse_mock_world(
        R"({"dim": 2, "layers": 1, "theta": -3.3, "true_axis": [3, 4],
            "response": {"kind": "tanh", "a": 0.6, "b": 0.8, "c": 0.5},
            "classes": {"male": {"mu": 1, "sigma": 2}, "female": {"mu": -1, "sigma": 0.5}}})");
    CHECK(w.theta == -3.3);
    CHECK(w.true_axis.isApprox(Eigen::Vector2d(0.6, 0.8)));
    CHECK(w.response.kind == ResponseCurve::Kind::Tanh);
    CHECK(w.response.c == 0.5);
    CHECK(w.male.sigma == 2.0);
    CHECK(w.female.mu == -1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_mock_world("{"), InvalidArgument);
    CHECK_THROWS_AS(parse_mock_world(R"({"dim": 4, "response": {"kind": "cubic"}})"), InvalidArgument);
    CHECK_THROWS_AS(parse_mock_world(R"({"dim": 4, "response": {"kind": "linear", "a": -1}})"), InvalidArgument);
    CHECK_THROWS_AS(parse_mock_world(R"({"dim": 0})"), Error);
    CHECK_THROWS_AS(parse_mock_world(R"({"dim": 3, "true_axis": [1, 0]})"), Error);
    CHECK_THROWS_AS(load_mock_world("/nonexistent/mock.json"), InvalidArgument);
  }
}

TEST_CASE("property: identity round trip preserves the W+ projection") {
  Gen gen(43);
  const MockWorld w = small_world(ResponseCurve::identity(), 32, 4);
  MockBackend mock(w);
  for (int i = 0; i < 1000; ++i) {
    const ExtendedLatent v = gen.extended(4, 32, 3.0);
    const AttributeAxis probe = AttributeAxis::from_raw(gen.vector(32));
    REQUIRE(std::abs(project_wplus(mock.encode(mock.decode(v)), probe) - project_wplus(v, probe)) <= 1e-9);
  }
}

TEST_CASE("property: re-encoded score is strictly increasing in the applied delta") {
  Gen gen(44);
  for (const ResponseCurve r : {ResponseCurve::identity(), ResponseCurve::linear(0.5), ResponseCurve::linear(1.7),
                                ResponseCurve::tanh(0.6, 0.8, 0.5), ResponseCurve::tanh(0.05, 3.0, 2.0)}) {
    const MockWorld w = small_world(r);
    MockBackend mock(w);
    const ExtendedLatent base = with_score(gen, w, -1.0);
    const AttributeAxis axis = AttributeAxis::from_raw(w.true_axis);
    double prev = -INFINITY;
    for (int k = 0; k < 100; ++k) {
      const double delta = -6.0 + 12.0 * k / 99.0;
      const double s = true_score(w, mock.encode(mock.decode(apply_edit(base, axis, delta))));
      REQUIRE(s > prev);
      prev = s;
    }
  }
}

TEST_CASE("property: off-axis components survive the round trip") {
  Gen gen(45);
  for (const ResponseCurve r : {ResponseCurve::linear(0.3), ResponseCurve::tanh(0.6, 0.8, 0.5)}) {
    const MockWorld w = small_world(r, 64, 6);
    MockBackend mock(w);
    for (int i = 0; i < 100; ++i) {
      const ExtendedLatent v = gen.extended(6, 64, 2.0);
      const ExtendedLatent back = mock.encode(mock.decode(v));
      REQUIRE((off_axis(w, back) - off_axis(w, v)).cwiseAbs().maxCoeff() <= 1e-9);
      REQUIRE(true_score(w, back) == doctest::Approx(r(true_score(w, v))).epsilon(1e-12));
    }
  }
}

TEST_CASE("line protocol handler") {
  MockBackend mock(small_world(ResponseCurve::linear(0.5), 2, 1));
  auto call = [&](const json& req) { return json::parse(handle_request(mock, req.dump())); };

  const json d = call({{"op", "decode"}, {"id", "a"}, {"payload", {{"layers", 1}, {"dim", 2}, {"latent", {1.0, 2.0}}}}});
  REQUIRE(d["ok"] == true);
  CHECK(d["id"] == "a");
  const std::string img = d["result"]["image"];

  const json e = call({{"op", "encode"}, {"id", "b"}, {"payload", {{"image", img}}}});
  REQUIRE(e["ok"] == true);
  CHECK(e["result"]["layers"] == 1);
  CHECK(e["result"]["dim"] == 2);
  CHECK(e["result"]["latent"].size() == 2);

  const json c = call({{"op", "classify"}, {"id", 7}, {"payload", {{"image", img}}}});
  REQUIRE(c["ok"] == true);
  CHECK(c["id"] == 7);
  CHECK(c["result"]["label"] == "Male");

  CHECK(call({{"op", "encode"}, {"id", "x"}, {"payload", {{"image", "ghost"}}}})["error"]["code"] == "unknown_image");
  CHECK(call({{"op", "decode"}, {"id", "x"}, {"payload", {{"layers", 1}, {"dim", 3}, {"latent", {1, 2, 3}}}}})["error"]["code"] ==
        "dimension_mismatch");
  CHECK(call({{"op", "decode"}, {"id", "x"}, {"payload", {{"layers", 1}, {"dim", 2}, {"latent", {1}}}}})["error"]["code"] ==
        "dimension_mismatch");
  CHECK(call({{"op", "paint"}, {"id", "x"}})["error"]["code"] == "bad_request");
  const json garbage = json::parse(handle_request(mock, "not json"));
  CHECK(garbage["ok"] == false);
  CHECK(garbage["error"]["code"] == "bad_request");
  CHECK(garbage["id"].is_null());

  std::istringstream in("\n" + json{{"op", "classify"}, {"id", 1}, {"payload", {{"image", img}}}}.dump() + "\n");
  std::ostringstream out;
  serve_backend(mock, in, out);
  CHECK(json::parse(out.str())["result"]["label"] == "Male");
}

TEST_CASE("external backend over a child process") {
  const json cfg{{"dim", 24}, {"layers", 3}, {"seed", 9}, {"response", {{"kind", "tanh"}, {"a", 0.6}, {"b", 0.8}, {"c", 0.5}}}};
  const std::string path = write_config(cfg);
  const MockWorld world = parse_mock_world(cfg.dump());
  MockBackend local(world);
  ExternalBackend remote(std::string(AXISEDIT_CLI) + " serve-mock --backend " + path, world.geometry);
  CHECK(remote.geometry() == world.geometry);

  Gen gen(46);
  for (int i = 0; i < 20; ++i) {
    const ExtendedLatent v = gen.extended(3, 24, 2.0);
    const ImageHandle a = local.decode(v), b = remote.decode(v);
    CHECK(a == b);
    CHECK((local.encode(a).blocks() - remote.encode(b).blocks()).cwiseAbs().maxCoeff() <= 1e-12);
    const SexLabel la = local.classify_sex(a), lb = remote.classify_sex(b);
    CHECK(la.label == lb.label);
    CHECK(la.confidence == doctest::Approx(lb.confidence).epsilon(1e-12));
  }
  CHECK_THROWS_AS(remote.encode({"ghost"}), UnknownImageError);
  CHECK_THROWS_AS(remote.decode(ExtendedLatent::zero({24, 2})), DimensionError);
  // The session survives errors.
  CHECK_NOTHROW(remote.decode(ExtendedLatent::zero({24, 3})));
  fs::remove(path);
}

TEST_CASE("external backend transport failures") {
  SUBCASE("server exits immediately") {
    ExternalBackend dead("true", {4, 1});
    CHECK_THROWS_AS(dead.decode(ExtendedLatent::zero({4, 1})), TransportError);
  }
  SUBCASE("server speaks nonsense") {
    ExternalBackend noisy("echo hello; cat >/dev/null", {4, 1});
    CHECK_THROWS_AS(noisy.decode(ExtendedLatent::zero({4, 1})), TransportError);
  }
  SUBCASE("server answers with the wrong id") {
    ExternalBackend wrong(R"(read l; echo '{"id":"other","ok":true,"result":{"image":"x"}}'; cat >/dev/null)", {4, 1});
    CHECK_THROWS_AS(wrong.decode(ExtendedLatent::zero({4, 1})), TransportError);
  }
}
