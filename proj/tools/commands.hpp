#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace axisedit::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInfeasible = 2, kNotConverged = 3 };

struct GenMockOptions {
  std::string backend;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

struct FitAxisOptions {
  std::string data;
  std::string out;
  double lambda = 1e-2;
  std::int64_t epochs = 50;
  std::int64_t batch = 64;
  std::uint64_t seed = 0;
};

struct FitDistOptions {
  std::string data;
  std::string axis;
  std::string dist_male;
  std::string dist_female;
  std::string hist;
  int bins = 40;
};

struct FeasibleOptions {
  double score = 0.0;
  double delta = 0.0;
  std::string dist;
};

struct EditOptions {
  std::string backend;
  std::string axis;
  std::string dist_male;
  std::string dist_female;
  std::string image;
  std::string delta;  // axis units, or a multiple of the class sigma with an "s" suffix
  std::string batch;
  double t = 0.1;
  double s = 7.0;
  std::int64_t max_iters = 100;
  std::int64_t layers = 18;
  int jobs = 1;
  std::uint64_t seed = 0;
  std::string out;
};

struct FrechetOptions {
  std::string a;
  std::string b;
};

// Each command writes one JSON document to `out`, logs to `log`, and
// returns a process exit code.
int gen_mock(const GenMockOptions& o, std::ostream& out, std::ostream& log);
int fit_axis(const FitAxisOptions& o, std::ostream& out, std::ostream& log);
int fit_dist(const FitDistOptions& o, std::ostream& out, std::ostream& log);
int feasible(const FeasibleOptions& o, std::ostream& out, std::ostream& log);
int edit(const EditOptions& o, std::ostream& out, std::ostream& log);
int frechet(const FrechetOptions& o, std::ostream& out, std::ostream& log);
int serve_mock(const std::string& backend, std::istream& in, std::ostream& out);

/// RFC 3339 UTC timestamp from SOURCE_DATE_EPOCH when set, else the clock.
std::string creation_timestamp();

}  // namespace axisedit::cli
