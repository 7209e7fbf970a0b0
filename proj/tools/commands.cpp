#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "axisedit/backend.hpp"
#include "axisedit/dataset.hpp"
#include "axisedit/edit.hpp"
#include "axisedit/io.hpp"
#include "axisedit/stats.hpp"
#include "axisedit/svm.hpp"
#include "axisedit/synth.hpp"

namespace axisedit::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kExecPrefix = "exec:";

bool is_external(const std::string& backend) { return backend.rfind(kExecPrefix, 0) == 0; }

std::unique_ptr<ModelBackend> open_backend(const std::string& target, std::int64_t layers, Eigen::Index dim) {
  if (is_external(target)) return std::make_unique<ExternalBackend>(target.substr(kExecPrefix.size()), Geometry{dim, layers});
  return std::make_unique<MockBackend>(load_mock_world(target));
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

std::vector<LabeledLatent> labeled_w_rows(const std::string& prefix) {
  DatasetReader reader(prefix);
  const auto& m = reader.manifest();
  if (!m.labels_present) throw InvalidArgument("dataset " + prefix + " has no labels");
  std::vector<LabeledLatent> out;
  out.reserve(static_cast<std::size_t>(m.count));
  Eigen::VectorXd row;
  std::optional<Label> label;
  while (reader.next(row, &label)) {
    // W+ rows train on their block mean, which is what project_wplus sees.
    if (m.space == Space::Wplus) {
      out.push_back({LatentVector(reader.as_extended(row).blocks().colwise().mean().transpose()), *label});
    } else {
      out.push_back({LatentVector(row), *label});
    }
  }
  return out;
}

double score_row(const DatasetReader& reader, const Eigen::VectorXd& row, const AttributeAxis& axis) {
  if (reader.manifest().space == Space::Wplus) return project_wplus(reader.as_extended(row), axis);
  return project_w(LatentVector(row), axis);
}

json distribution_json(const ClassDistribution& d) { return json::parse(distribution_to_json(d)); }

struct EditItem {
  std::string image;
  std::string delta;
};

struct EditOutcome {
  json record;
  int code = kOk;
  std::string trace_jsonl;
  std::optional<std::array<double, 3>> curve;
};

std::vector<EditItem> read_batch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open batch file " + path);
  std::vector<EditItem> items;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find_first_not_of(" \t");
    if (hash == std::string::npos || line[hash] == '%' || line.compare(hash, 2, "//") == 0) continue;
    std::istringstream ls(line);
    EditItem it;
    if (!(ls >> it.image >> it.delta)) throw InvalidArgument("batch file: expected '<image> <delta>' in line: " + line);
    items.push_back(std::move(it));
  }
  return items;
}

double parse_delta(const std::string& text, double sigma) {
  std::string num = text;
  double scale = 1.0;
  if (!num.empty() && (num.back() == 's' || num.back() == 'S')) {
    num.pop_back();
    scale = sigma;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(num, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != num.size() || num.empty()) throw InvalidArgument("cannot parse delta '" + text + "'");
  return v * scale;
}

/// "prefix#row" loads a dataset row and decodes it into an image; anything
/// else is taken as an image id the backend already knows.
ImageHandle resolve_image(const std::string& ref, ModelBackend& backend) {
  const auto hash = ref.rfind('#');
  if (hash == std::string::npos || !fs::exists(manifest_path(ref.substr(0, hash)))) return {ref};
  const std::string prefix = ref.substr(0, hash);
  std::int64_t index = -1;
  try {
    index = std::stoll(ref.substr(hash + 1));
  } catch (const std::exception&) {
  }
  DatasetReader reader(prefix);
  if (index < 0 || index >= reader.manifest().count) throw InvalidArgument("image ref " + ref + ": row out of range");
  Eigen::VectorXd row;
  for (std::int64_t i = 0; i <= index; ++i) reader.next(row);
  if (reader.manifest().space == Space::W) {
    return backend.decode(ExtendedLatent::tiled(LatentVector(row), backend.geometry().layers));
  }
  return backend.decode(reader.as_extended(row));
}

EditOutcome run_one(std::size_t index, const EditItem& item, const EditOptions& o, const AttributeAxis& axis,
                    const ClassDistribution& male, const ClassDistribution& female, ModelBackend& backend) {
  EditOutcome res;
  json& r = res.record;
  r["index"] = index;
  r["image_ref"] = item.image;
  try {
    const ImageHandle img = resolve_image(item.image, backend);
    const SexLabel sex = backend.classify_sex(img);
    const ClassDistribution& dist = sex.label == Label::Male ? male : female;
    r["label"] = to_string(sex.label);
    r["confidence"] = sex.confidence;

    EditRequest req;
    req.image = img;
    req.delta_desired = parse_delta(item.delta, dist.sigma);
    req.step_divisor = o.s;
    req.threshold = o.t;
    req.sigma = dist.sigma;
    req.max_iters = o.max_iters;
    r["delta_desired"] = req.delta_desired;

    try {
      const EditResult er = optimize_edit(req, axis, dist, backend);
      const auto& last = er.trace.iterations.back();
      r["s_o"] = er.trace.s_o;
      r["s_r"] = er.trace.s_r;
      r["delta_e"] = er.delta_e;
      r["s_e"] = last.s_e;
      r["iterations"] = er.trace.iterations.size();
      r["converged"] = er.trace.converged;
      r["edited_image"] = er.image.id;
      r["status"] = er.trace.converged ? "converged" : "not_converged";
      res.code = er.trace.converged ? kOk : kNotConverged;
      std::ostringstream trace;
      write_trace_jsonl(trace, er.trace);
      res.trace_jsonl = trace.str();
      res.curve = {req.delta_desired, er.delta_e, last.s_e};
    } catch (const EditNotPossible&) {
      const double s_o = project_wplus(backend.encode(img), axis);
      r["s_o"] = s_o;
      r["s_r"] = s_o + req.delta_desired;
      r["lower"] = dist.lower;
      r["upper"] = dist.upper;
      r["status"] = "editing not possible";
      res.code = kInfeasible;
    }
  } catch (const Error& e) {
    r["status"] = "error";
    r["error"] = e.what();
    res.code = kUsage;
  }
  return res;
}

int worst(int a, int b) {
  auto rank = [](int c) { return c == kNotConverged ? 3 : c == kInfeasible ? 2 : c == kUsage ? 1 : 0; };
  return rank(a) >= rank(b) ? a : b;
}

}  // namespace

std::string creation_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) t = static_cast<std::time_t>(std::stoll(env));
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

int gen_mock(const GenMockOptions& o, std::ostream& out, std::ostream& log) {
  if (is_external(o.backend)) throw InvalidArgument("gen-mock needs a mock backend configuration");
  const MockWorld world = load_mock_world(o.backend);
  const auto samples = sample_mock_latents(world, o.n, o.seed);
  DatasetWriter writer(o.out, Space::W, world.geometry.dim, 1, true, creation_timestamp());
  std::int64_t males = 0;
  for (const auto& s : samples) {
    writer.append(s.vector, s.label);
    males += s.label == Label::Male;
  }
  const auto m = writer.finish();
  log << "gen-mock: wrote " << m.count << " latents to " << o.out << '\n';
  emit(out, {{"command", "gen-mock"},
             {"dataset", o.out},
             {"count", m.count},
             {"males", males},
             {"females", m.count - males},
             {"dim", m.dim},
             {"checksum", m.checksum}});
  return kOk;
}

int fit_axis(const FitAxisOptions& o, std::ostream& out, std::ostream& log) {
  const auto data = labeled_w_rows(o.data);
  const SvmHyperparams hp{o.lambda, o.epochs, o.seed, o.batch};
  const SvmModel model = train_svm(data, hp);
  AttributeAxis axis = extract_axis(model, data);
  AxisProvenance meta = axis.meta();
  meta.date = creation_timestamp();
  axis = AttributeAxis::from_raw(axis.direction() * axis.norm_raw(), meta);
  const std::string fingerprint = save_axis(o.out, model, axis);
  const double acc = training_accuracy(model, data);
  log << "fit-axis: " << data.size() << " examples, training accuracy " << acc << '\n';
  emit(out, {{"command", "fit-axis"},
             {"axis", o.out},
             {"fingerprint", fingerprint},
             {"dim", axis.dim()},
             {"norm_raw", axis.norm_raw()},
             {"bias", model.bias},
             {"training_size", data.size()},
             {"training_accuracy", acc}});
  return kOk;
}

int fit_dist(const FitDistOptions& o, std::ostream& out, std::ostream& log) {
  const AxisFile axis = load_axis(o.axis);
  DatasetReader reader(o.data);
  if (!reader.manifest().labels_present) throw InvalidArgument("dataset " + o.data + " has no labels");
  std::vector<double> male_scores, female_scores;
  Eigen::VectorXd row;
  std::optional<Label> label;
  while (reader.next(row, &label)) {
    (*label == Label::Male ? male_scores : female_scores).push_back(score_row(reader, row, axis.axis));
  }
  ClassDistribution male = fit_distribution(male_scores, Label::Male);
  ClassDistribution female = fit_distribution(female_scores, Label::Female);
  male.axis_fingerprint = female.axis_fingerprint = axis.fingerprint;
  save_distribution(o.dist_male, male);
  save_distribution(o.dist_female, female);

  if (!o.hist.empty()) {
    const auto [lo_m, hi_m] = std::minmax_element(male_scores.begin(), male_scores.end());
    const auto [lo_f, hi_f] = std::minmax_element(female_scores.begin(), female_scores.end());
    const double lo = std::min(*lo_m, *lo_f), hi = std::max(*hi_m, *hi_f);
    std::ofstream h(o.hist, std::ios::trunc);
    h << std::setprecision(10);
    write_histogram_csv(h, {{Label::Male, histogram(male_scores, lo, hi, o.bins)},
                            {Label::Female, histogram(female_scores, lo, hi, o.bins)}});
    if (!h) throw Error("cannot write " + o.hist);
  }
  log << "fit-dist: male n=" << male.n << " mu=" << male.mu << " sigma=" << male.sigma << "; female n=" << female.n
      << " mu=" << female.mu << " sigma=" << female.sigma << '\n';
  emit(out, {{"command", "fit-dist"}, {"male", distribution_json(male)}, {"female", distribution_json(female)}});
  return kOk;
}

int feasible(const FeasibleOptions& o, std::ostream& out, std::ostream&) {
  const ClassDistribution d = load_distribution(o.dist);
  const bool ok = editing_possible(o.score, o.delta, d);
  emit(out, {{"command", "feasible"},
             {"possible", ok},
             {"target", o.score + o.delta},
             {"lower", d.lower},
             {"upper", d.upper}});
  return ok ? kOk : kInfeasible;
}

int edit(const EditOptions& o, std::ostream& out, std::ostream& log) {
  if (o.batch.empty() == o.image.empty()) throw InvalidArgument("edit: give exactly one of --image or --batch");
  if (!(o.t > 0.0)) throw InvalidArgument("edit: --t must be > 0");
  if (!(o.s > 1.0)) throw InvalidArgument("edit: --s must be > 1");
  if (o.max_iters <= 0) throw InvalidArgument("edit: --max-iters must be > 0");

  const AxisFile axis = load_axis(o.axis);
  const ClassDistribution male = load_distribution(o.dist_male);
  const ClassDistribution female = load_distribution(o.dist_female);
  for (const auto* d : {&male, &female}) {
    if (!d->axis_fingerprint.empty() && d->axis_fingerprint != axis.fingerprint) {
      log << "edit: warning: " << to_string(d->label) << " distribution was fitted on a different axis\n";
    }
  }

  std::vector<EditItem> items;
  if (o.batch.empty()) {
    if (o.delta.empty()) throw InvalidArgument("edit: --delta is required with --image");
    items.push_back({o.image, o.delta});
  } else {
    items = read_batch(o.batch);
  }

  // Static round-robin assignment keeps results independent of scheduling.
  const std::size_t jobs = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(o.jobs, 1)), 1, std::max<std::size_t>(items.size(), 1));
  std::vector<EditOutcome> results(items.size());
  std::vector<std::string> worker_errors(jobs);
  auto worker = [&](std::size_t w) {
    try {
      auto backend = open_backend(o.backend, o.layers, axis.axis.dim());
      if (backend->geometry().dim != axis.axis.dim()) throw DimensionError("edit: backend and axis dimensions differ");
      for (std::size_t i = w; i < items.size(); i += jobs) results[i] = run_one(i, items[i], o, axis.axis, male, female, *backend);
    } catch (const std::exception& e) {
      worker_errors[w] = e.what();
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
  }
  for (const auto& e : worker_errors) {
    if (!e.empty()) throw Error(e);
  }

  int code = kOk;
  json list = json::array();
  for (const auto& r : results) {
    code = worst(code, r.code);
    list.push_back(r.record);
  }

  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream csv(fs::path(o.out) / "response.csv", std::ios::trunc);
    csv << std::setprecision(17) << "delta_desired,delta_e,s_e_final\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].trace_jsonl.empty()) {
        std::ostringstream name;
        name << "edit_" << std::setw(4) << std::setfill('0') << i << ".trace.jsonl";
        std::ofstream(fs::path(o.out) / name.str(), std::ios::trunc) << results[i].trace_jsonl;
      }
      if (results[i].curve) {
        const auto& c = *results[i].curve;
        csv << c[0] << ',' << c[1] << ',' << c[2] << '\n';
      }
    }
  }

  for (const auto& r : results) {
    const auto& rec = r.record;
    log << "edit[" << rec["index"].get<std::size_t>() << "] " << rec["image_ref"].get<std::string>() << ": "
        << rec.value("status", std::string("?"));
    if (rec.contains("iterations")) log << " after " << rec["iterations"].get<std::size_t>() << " iterations";
    if (rec.contains("error")) log << " (" << rec["error"].get<std::string>() << ")";
    log << '\n';
  }
  emit(out, {{"command", "edit"}, {"seed", o.seed}, {"results", list}});
  return code;
}

int frechet(const FrechetOptions& o, std::ostream& out, std::ostream& log) {
  DatasetReader ra(o.a), rb(o.b);
  const auto da = ra.manifest().row_size(), db = rb.manifest().row_size();
  if (da != db) throw DimensionError("frechet: datasets have row sizes " + std::to_string(da) + " and " + std::to_string(db));
  GaussianAccumulator acc_a(da), acc_b(db);
  Eigen::VectorXd row;
  while (ra.next(row)) acc_a.push(row);
  while (rb.next(row)) acc_b.push(row);
  const double d = frechet_distance(acc_a.finish(), acc_b.finish());
  log << "frechet: " << d << '\n';
  emit(out, {{"command", "frechet"}, {"frechet_distance", d}, {"dim", da}, {"n_a", acc_a.count()}, {"n_b", acc_b.count()}});
  return kOk;
}

int serve_mock(const std::string& backend, std::istream& in, std::ostream& out) {
  MockBackend mock(load_mock_world(backend));
  serve_backend(mock, in, out);
  return kOk;
}

}  // namespace axisedit::cli
