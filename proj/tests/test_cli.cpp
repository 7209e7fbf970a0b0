#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "axisedit/io.hpp"
#include "commands.hpp"

using namespace axisedit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Pipeline {
  fs::path dir;
  std::string mock, data, axis, male, female;

  Pipeline() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("axisedit_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
    mock = (dir / "mock.json").string();
    data = (dir / "train").string();
    axis = (dir / "axis.json").string();
    male = (dir / "male.json").string();
    female = (dir / "female.json").string();
    std::ofstream(mock) << R"({"dim": 64, "layers": 4, "seed": 3, "theta": -3.3,
                               "response": {"kind": "tanh", "a": 0.6, "b": 0.8, "c": 0.5}})";
    ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    std::ostringstream out, log;
    REQUIRE(cli::gen_mock({mock, 600, 8, data}, out, log) == cli::kOk);
    cli::FitAxisOptions fit;
    fit.data = data;
    fit.out = axis;
    REQUIRE(cli::fit_axis(fit, out, log) == cli::kOk);
    cli::FitDistOptions fd;
    fd.data = data;
    fd.axis = axis;
    fd.dist_male = male;
    fd.dist_female = female;
    fd.hist = (dir / "hist.csv").string();
    REQUIRE(cli::fit_dist(fd, out, log) == cli::kOk);
  }
  ~Pipeline() { fs::remove_all(dir); }

  cli::EditOptions edit_options(const std::string& backend) const {
    cli::EditOptions o;
    o.backend = backend;
    o.axis = axis;
    o.dist_male = male;
    o.dist_female = female;
    return o;
  }

  std::pair<int, json> edit(cli::EditOptions o) const {
    std::ostringstream out, log;
    const int rc = cli::edit(o, out, log);
    return {rc, json::parse(out.str())};
  }
};

}  // namespace

TEST_CASE("creation timestamp honours SOURCE_DATE_EPOCH") {
  ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  CHECK(cli::creation_timestamp() == "1970-01-01T00:00:00Z");
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  CHECK(cli::creation_timestamp() == "2023-11-14T22:13:20Z");
}

TEST_CASE("pipeline artifacts") {
  Pipeline p;
  const AxisFile a = load_axis(p.axis);
  CHECK(a.axis.dim() == 64);
  CHECK(a.axis.meta().date == "2023-11-14T22:13:20Z");
  CHECK(a.axis.meta().training_size == 600);
  const auto m = load_distribution(p.male), f = load_distribution(p.female);
  CHECK(m.axis_fingerprint == a.fingerprint);
  CHECK(m.mu > f.mu);
  CHECK(m.n + f.n == 600);
  std::ifstream hist(p.dir / "hist.csv");
  std::string header;
  std::getline(hist, header);
  CHECK(header == "bin_center,count,label");
}

TEST_CASE("feasible exit codes") {
  Pipeline p;
  std::ostringstream out, log;
  const auto m = load_distribution(p.male);
  CHECK(cli::feasible({m.mu, 0.0, p.male}, out, log) == cli::kOk);
  CHECK(cli::feasible({m.mu, 3.0 * m.sigma, p.male}, out, log) == cli::kInfeasible);
}

TEST_CASE("single edits") {
  Pipeline p;
  SUBCASE("zero deviation leaves the score unchanged") {
    auto o = p.edit_options(p.mock);
    o.image = p.data + "#0";
    o.delta = "0";
    const auto [rc, j] = p.edit(o);
    CHECK(rc == cli::kOk);
    const auto& r = j["results"][0];
    CHECK(r["status"] == "converged");
    CHECK(r["s_e"].get<double>() == r["s_o"].get<double>());
    CHECK(r["delta_e"].get<double>() == 0.0);
  }
  SUBCASE("sigma suffix") {
    auto o = p.edit_options(p.mock);
    o.image = p.data + "#1";
    o.delta = "-0.5s";
    const auto [rc, j] = p.edit(o);
    const auto& r = j["results"][0];
    const auto d = load_distribution(r["label"] == "Male" ? p.male : p.female);
    CHECK(r["delta_desired"].get<double>() == doctest::Approx(-0.5 * d.sigma).epsilon(1e-15));
    CHECK((rc == cli::kOk || rc == cli::kNotConverged));
  }
  SUBCASE("out of bounds") {
    auto o = p.edit_options(p.mock);
    o.image = p.data + "#2";
    o.delta = "25";
    const auto [rc, j] = p.edit(o);
    CHECK(rc == cli::kInfeasible);
    CHECK(j["results"][0]["status"] == "editing not possible");
  }
  SUBCASE("bad arguments") {
    auto o = p.edit_options(p.mock);
    std::ostringstream out, log;
    CHECK_THROWS_AS(cli::edit(o, out, log), InvalidArgument);
    o.image = p.data + "#0";
    o.delta = "abc";
    const auto [rc, j] = p.edit(o);
    CHECK(rc == cli::kUsage);
    CHECK(j["results"][0]["status"] == "error");
    o.delta = "1";
    o.image = p.data + "#600";
    CHECK(p.edit(o).first == cli::kUsage);
  }
}

TEST_CASE("batch edits are independent of the worker count") {
  Pipeline p;
  const std::string batch = (p.dir / "batch.txt").string();
  std::ofstream(batch) << "% image delta\n" << p.data << "#0 0.5s\n" << p.data << "#1 -1s\n\n"
                       << p.data << "#2 0\n" << p.data << "#3 30\n" << p.data << "#4 1\n";
  auto o = p.edit_options(p.mock);
  o.batch = batch;
  o.out = (p.dir / "edits1").string();
  const auto [rc1, j1] = p.edit(o);
  o.jobs = 4;
  o.out = (p.dir / "edits4").string();
  const auto [rc4, j4] = p.edit(o);
  CHECK(rc1 == rc4);
  // Image handles are numbered per backend session; everything else must match.
  auto strip = [](json j) {
    for (auto& r : j["results"]) r.erase("edited_image");
    return j;
  };
  CHECK(strip(j1) == strip(j4));
  CHECK(j1["results"].size() == 5);
  CHECK(j1["results"][3]["status"] == "editing not possible");

  std::ifstream csv(p.dir / "edits1" / "response.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "delta_desired,delta_e,s_e_final");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 4);
  CHECK(fs::exists(p.dir / "edits1" / "edit_0000.trace.jsonl"));
  CHECK_FALSE(fs::exists(p.dir / "edits1" / "edit_0003.trace.jsonl"));
}

TEST_CASE("external backend gives the same edits as the in-process mock") {
  Pipeline p;
  auto local = p.edit_options(p.mock);
  local.image = p.data + "#5";
  local.delta = "-0.7";
  local.layers = 4;
  auto remote = local;
  remote.backend = "exec:" + std::string(AXISEDIT_CLI) + " serve-mock --backend " + p.mock;
  const auto [rc_l, jl] = p.edit(local);
  const auto [rc_r, jr] = p.edit(remote);
  CHECK(rc_l == rc_r);
  const auto& a = jl["results"][0];
  const auto& b = jr["results"][0];
  CHECK(a["label"] == b["label"]);
  CHECK(a["iterations"] == b["iterations"]);
  CHECK(a["delta_e"].get<double>() == doctest::Approx(b["delta_e"].get<double>()).epsilon(1e-12));
  CHECK(a["s_e"].get<double>() == doctest::Approx(b["s_e"].get<double>()).epsilon(1e-12));
}

TEST_CASE("frechet command") {
  Pipeline p;
  std::ostringstream out, log;
  REQUIRE(cli::frechet({p.data, p.data}, out, log) == cli::kOk);
  CHECK(json::parse(out.str())["frechet_distance"].get<double>() < 1e-6);

  const std::string other = (p.dir / "small").string();
  std::ofstream((p.dir / "small.json").string()) << R"({"dim": 8, "layers": 1})";
  REQUIRE(cli::gen_mock({(p.dir / "small.json").string(), 10, 1, other}, out, log) == cli::kOk);
  CHECK_THROWS_AS(cli::frechet({p.data, other}, out, log), DimensionError);
}
