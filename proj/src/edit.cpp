#include "axisedit/edit.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

namespace axisedit {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Init:
      return "Init";
    case Condition::A:
      return "A";
    case Condition::B:
      return "B";
    case Condition::C:
      return "C";
    case Condition::D:
      return "D";
    case Condition::E:
      return "E";
    case Condition::F:
      return "F";
  }
  return "Init";
}

void EditRequest::validate() const {
  if (!std::isfinite(delta_desired)) throw InvalidArgument("edit request: delta must be finite");
  if (!std::isfinite(step_divisor) || !(step_divisor > 1.0)) throw InvalidArgument("edit request: step must be > 1");
  if (!std::isfinite(threshold) || !(threshold > 0.0)) throw InvalidArgument("edit request: threshold must be > 0");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw InvalidArgument("edit request: sigma must be > 0");
  if (max_iters <= 0) throw InvalidArgument("edit request: max_iters must be > 0");
}

bool editing_possible(Score s_o, double delta_desired, const ClassDistribution& dist) {
  const double target = s_o + delta_desired;
  return !(target < dist.lower || target > dist.upper);
}

namespace {

constexpr double kReseedFraction = 1e-3;

struct Step {
  double delta;
  Condition condition;
};

Step next_delta(double delta, double s_e, double s_o, double s_r, double s) {
  if (s_r > s_o) {
    if (s_e > s_o) {
      if (s_e > s_r) return {delta - delta / s, Condition::A};
      return {delta + delta / s, Condition::B};
    }
    return {std::abs(delta) + std::abs(delta) / s, Condition::C};
  }
  if (s_e < s_o) {
    if (s_e > s_r) return {delta + delta / s, Condition::D};
    return {delta - delta / s, Condition::E};
  }
  // Deliberately not the mirror image of C.
  return {-std::abs(delta) + delta / s, Condition::F};
}

}  // namespace

EditResult optimize_edit(const EditRequest& req, const AttributeAxis& axis, const ClassDistribution& dist,
                         ModelBackend& backend) {
  req.validate();
  const ExtendedLatent v_o = backend.encode(req.image);
  const double s_o = project_wplus(v_o, axis);
  if (!editing_possible(s_o, req.delta_desired, dist)) {
    throw EditNotPossible("editing not possible: target " + std::to_string(s_o + req.delta_desired) +
                          " outside [" + std::to_string(dist.lower) + ", " + std::to_string(dist.upper) + "]");
  }

  EditResult out;
  out.trace.s_o = s_o;
  out.trace.s_r = s_o + req.delta_desired;
  const double s_r = out.trace.s_r;
  const double tolerance = req.threshold * req.sigma;

  if (req.delta_desired == 0.0) {
    out.image = backend.decode(v_o);
    out.trace.iterations.push_back({1, 0.0, s_o, Condition::Init});
    out.trace.converged = true;
    return out;
  }

  auto evaluate = [&](double delta) {
    out.image = backend.decode(apply_edit(v_o, axis, delta));
    return project_wplus(backend.encode(out.image), axis);
  };

  double delta = req.delta_desired;
  double s_e = evaluate(delta);
  out.trace.iterations.push_back({1, delta, s_e, Condition::Init});

  while (std::abs(s_e - s_r) > tolerance && static_cast<std::int64_t>(out.trace.iterations.size()) < req.max_iters) {
    Step step = next_delta(delta, s_e, s_o, s_r, req.step_divisor);
    if (step.delta == 0.0) step.delta = -req.delta_desired * kReseedFraction;
    delta = step.delta;
    s_e = evaluate(delta);
    out.trace.iterations.push_back(
        {static_cast<std::int64_t>(out.trace.iterations.size()) + 1, delta, s_e, step.condition});
  }

  out.delta_e = delta;
  out.trace.converged = std::abs(s_e - s_r) <= tolerance;
  return out;
}

void write_trace_jsonl(std::ostream& os, const EditTrace& trace) {
  for (const auto& e : trace.iterations) {
    os << nlohmann::json{{"iter", e.iter}, {"delta_e", e.delta_e}, {"s_e", e.s_e}, {"condition", to_string(e.condition)}}
              .dump()
       << '\n';
  }
}

}  // namespace axisedit
