#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "axisedit/backend.hpp"
#include "axisedit/latent.hpp"
#include "axisedit/stats.hpp"

namespace axisedit {

/// Which update rule produced an iteration's delta. A-C handle upward edits
/// (S_r > S_o), D-F downward ones.
enum class Condition { Init, A, B, C, D, E, F };

std::string_view to_string(Condition c);

struct EditRequest {
  ImageHandle image;
  double delta_desired = 0.0;  // axis units
  double step_divisor = 7.0;   // s
  double threshold = 0.1;      // T
  double sigma = 1.0;          // class sigma
  std::int64_t max_iters = 100;

  void validate() const;
};

struct TraceEntry {
  std::int64_t iter = 0;
  double delta_e = 0.0;
  double s_e = 0.0;
  Condition condition = Condition::Init;
};

struct EditTrace {
  std::vector<TraceEntry> iterations;
  double s_o = 0.0;
  double s_r = 0.0;
  bool converged = false;
};

struct EditResult {
  ImageHandle image;
  double delta_e = 0.0;
  EditTrace trace;
};

/// True iff the target score s_o + delta_desired lies within [lower, upper]
/// of the class distribution. s_o itself may be out of bounds.
bool editing_possible(Score s_o, double delta_desired, const ClassDistribution& dist);

/// Iterative search for the edit intensity delta_e whose decoded and
/// re-encoded image lands within threshold * sigma of S_o + delta_desired.
/// Every candidate restarts from the original latent. Throws EditNotPossible
/// when the target is outside the class bounds; a run that exhausts
/// max_iters returns with trace.converged == false.
EditResult optimize_edit(const EditRequest& req, const AttributeAxis& axis, const ClassDistribution& dist,
                         ModelBackend& backend);

/// One JSON object per line: {"iter", "delta_e", "s_e", "condition"}.
void write_trace_jsonl(std::ostream& os, const EditTrace& trace);

}  // namespace axisedit
