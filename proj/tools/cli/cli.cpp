#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "qnnv/encoder.hpp"
#include "qnnv/ilp.hpp"
#include "qnnv/model_io.hpp"
#include "qnnv/verify.hpp"
#include "report.hpp"

namespace qnnv::cli {

namespace {

namespace fs = std::filesystem;

// Bad flags, unreadable or inconsistent inputs.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaskOptions {
  std::string model;
  std::string input;
  bool raw = false;
  int64_t radius = 0;
  std::string norm = "inf";
  std::string property = "class";
  bool no_ia = false;
  double timeout = 7200;
  std::string report;
  std::vector<std::size_t> samples;
};

struct MrrFlags {
  int64_t start_r = 10;
  int64_t step = 10;
  int64_t bucket = 5;
};

struct EncodeFlags {
  std::size_t sample = 1;
  std::string output = "-";
};

struct QuantizeFlags {
  std::string real;
  std::string output = "-";
  int preset = 0;
  std::string cfg_in, cfg_w, cfg_b, cfg_out, cfg_out_hidden, cfg_out_last;
  bool allow_clamp = false;
};

struct BenchFlags {
  std::string tasks;
  std::string output = "-";
  unsigned threads = 1;
};

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot write " + path);
  file << text;
}

unsigned default_threads() {
  if (const char* env = std::getenv("QNNV_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

struct Loaded {
  QuantizedNetwork qnn;
  std::vector<Sample> samples;
};

Loaded load_inputs(const TaskOptions& o) {
  Loaded l{load_qnn(o.model), {}};
  l.samples = load_dataset(o.input, l.qnn.cfg_in(), o.raw, l.qnn.input_size());
  return l;
}

std::vector<std::size_t> selected(const TaskOptions& o, std::size_t available) {
  std::vector<std::size_t> ids = o.samples;
  if (ids.empty()) {
    for (std::size_t i = 1; i <= available; ++i) ids.push_back(i);
  }
  for (std::size_t id : ids) {
    if (id < 1 || id > available) {
      throw UsageError("sample " + std::to_string(id) + " out of range (dataset has " + std::to_string(available) +
                       ")");
    }
  }
  return ids;
}

void check_task_flags(const TaskOptions& o) {
  if (o.radius < 0) throw UsageError("--radius must be non-negative");
  if (o.timeout < 0) throw UsageError("--timeout must be non-negative");
}

int cmd_verify(const TaskOptions& o, std::ostream& out) {
  check_task_flags(o);
  const Norm norm = parse_norm(o.norm);
  const PropertyKind kind = parse_property_kind(o.property);
  const Loaded in = load_inputs(o);
  std::vector<RunReport> reports;
  bool timed_out = false;
  for (std::size_t id : selected(o, in.samples.size())) {
    const InputRegionSpec region{in.samples[id - 1].values, o.radius, norm};
    VerifyOptions options;
    options.use_interval_analysis = !o.no_ia;
    options.deadline = deadline_after(o.timeout);
    const Verdict v = verify_robustness(in.qnn, region, kind, options);
    reports.push_back(make_report(reports.size() + 1, o.model, o.input, id, region, kind, !o.no_ia, v));
    out << verdict_line(reports.back()) << '\n';
    timed_out |= v.status == VerdictStatus::kTimeout;
  }
  if (!o.report.empty()) write_output(o.report, reports_to_json("verify", reports), out);
  return timed_out ? kExitTimeout : kExitOk;
}

int cmd_mrr(const TaskOptions& o, const MrrFlags& f, std::ostream& out) {
  check_task_flags(o);
  if (f.start_r < 1 || f.step < 1 || f.bucket < 1) throw UsageError("--start-r, --step and --bucket must be >= 1");
  const Norm norm = parse_norm(o.norm);
  const PropertyKind kind = parse_property_kind(o.property);
  const Loaded in = load_inputs(o);

  nlohmann::ordered_json doc;
  doc["command"] = "mrr";
  doc["model"] = o.model;
  doc["norm"] = to_string(norm);
  doc["start_r"] = f.start_r;
  doc["step"] = f.step;
  doc["samples"] = nlohmann::ordered_json::array();
  std::vector<int64_t> radii;
  bool timed_out = false;
  for (std::size_t id : selected(o, in.samples.size())) {
    MrrOptions options;
    options.start_r = f.start_r;
    options.step = f.step;
    options.kind = kind;
    options.use_interval_analysis = !o.no_ia;
    options.deadline = deadline_after(o.timeout);
    const MrrResult r = compute_mrr(in.qnn, in.samples[id - 1].values, norm, options);
    out << "sample " << id << ": mrr " << r.radius << " (" << to_string(r.status) << ")\n";
    nlohmann::ordered_json s;
    s["sample"] = id;
    s["mrr"] = r.radius;
    s["status"] = to_string(r.status);
    s["probes"] = nlohmann::ordered_json::array();
    for (const auto& p : r.probes) s["probes"].push_back({{"radius", p.radius}, {"verdict", to_string(p.status)}});
    doc["samples"].push_back(std::move(s));
    if (r.status == MrrResult::Status::kTimeout) {
      timed_out = true;
    } else {
      radii.push_back(r.radius);
    }
  }

  // Summary over samples whose search finished.
  double mean = 0;
  for (int64_t r : radii) mean += static_cast<double>(r);
  if (!radii.empty()) mean /= static_cast<double>(radii.size());
  std::map<int64_t, std::size_t> buckets;
  for (int64_t r : radii) ++buckets[r / f.bucket];
  out << "mean mrr: " << (radii.empty() ? std::string("n/a") : format_fixed(mean, 1)) << " over " << radii.size()
      << " sample(s)\n";
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& [b, count] : buckets) {
    const int64_t lo = b * f.bucket;
    const int64_t hi = lo + f.bucket - 1;
    out << "  [" << lo << ", " << hi << "]: " << count << '\n';
    hist.push_back({{"lo", lo}, {"hi", hi}, {"count", count}});
  }
  doc["summary"] = {{"completed", radii.size()},
                    {"mean", radii.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(mean)},
                    {"histogram", hist}};
  if (!o.report.empty()) write_output(o.report, doc.dump(2) + "\n", out);
  return timed_out ? kExitTimeout : kExitOk;
}

int cmd_encode(const TaskOptions& o, const EncodeFlags& f, std::ostream& out) {
  check_task_flags(o);
  const Norm norm = parse_norm(o.norm);
  const PropertyKind kind = parse_property_kind(o.property);
  const Loaded in = load_inputs(o);
  if (f.sample < 1 || f.sample > in.samples.size()) throw UsageError("--sample out of range");
  const InputRegionSpec region{in.samples[f.sample - 1].values, o.radius, norm};
  const IntVector reference = qnn_forward(in.qnn, region.center);
  const PropertySpec property = kind == PropertyKind::kOutputDifference
                                    ? PropertySpec::output_difference(reference)
                                    : PropertySpec::misclassification(classify(reference), reference.size());
  BuildOptions build;
  build.use_interval_analysis = !o.no_ia;
  const Encoding enc = build_verification_model(in.qnn, region, property, build);
  write_output(f.output, ilp::export_lp(enc.model), out);
  return kExitOk;
}

QuantizedNetwork::Configs quantize_configs(const QuantizeFlags& f) {
  std::optional<QuantConfig> in, w, b, hidden, last;
  if (f.preset != 0) {
    const int q = f.preset;
    in = QuantConfig(Signedness::kUnsigned, 8, 8);
    w = QuantConfig(Signedness::kSigned, q, q - 1);
    b = QuantConfig(Signedness::kSigned, q, q - 2);
    hidden = last = QuantConfig(Signedness::kUnsigned, q, q - 2);
  }
  auto take = [](std::optional<QuantConfig>& slot, const std::string& text) {
    if (!text.empty()) slot = QuantConfig::parse(text);
  };
  take(in, f.cfg_in);
  take(w, f.cfg_w);
  take(b, f.cfg_b);
  take(hidden, f.cfg_out);
  take(last, f.cfg_out);
  take(hidden, f.cfg_out_hidden);
  take(last, f.cfg_out_last);
  if (!in || !w || !b || !hidden || !last) {
    throw UsageError("every configuration needs a value: use --preset or --cfg-in/--cfg-w/--cfg-b/--cfg-out");
  }
  return {*in, *w, *b, *hidden, *last};
}

int cmd_quantize(const QuantizeFlags& f, std::ostream& out, std::ostream& err) {
  const RealNetwork dnn = load_real_network(f.real);
  QuantizationReport report;
  const QuantizedNetwork qnn = quantize_network(dnn, quantize_configs(f), &report);
  const std::size_t clamped = report.saturated_weights + report.saturated_biases;
  if (clamped != 0) {
    const std::string what = std::to_string(report.saturated_weights) + " weight(s) and " +
                             std::to_string(report.saturated_biases) + " bias(es) fall outside their grids";
    if (!f.allow_clamp) throw UsageError(what + "; pass --allow-clamp to saturate them");
    err << "warning: " << what << ", saturated\n";
  }
  write_output(f.output, qnn_to_json(qnn), out);
  return kExitOk;
}

int cmd_eval(const TaskOptions& o, std::ostream& out) {
  const Loaded in = load_inputs(o);
  if (in.samples.empty()) throw UsageError("dataset " + o.input + " has no samples");
  std::size_t correct = 0;
  for (const auto& s : in.samples) {
    correct += static_cast<int64_t>(classify(qnn_forward(in.qnn, s.values))) == s.label;
  }
  const double pct = 100.0 * static_cast<double>(correct) / static_cast<double>(in.samples.size());
  out << "accuracy: " << format_fixed(pct, 2) << "% (" << correct << "/" << in.samples.size() << ")\n";
  return kExitOk;
}

struct BenchTask {
  std::string model;
  std::string dataset;
  std::size_t sample = 0;
  int64_t radius = 0;
  Norm norm = Norm::kLinf;
};

std::vector<BenchTask> read_tasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path fp(p);
    return (fp.is_absolute() || base.empty() ? fp : base / fp).lexically_normal().string();
  };
  std::vector<BenchTask> tasks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (tasks.empty() && !cells.empty() && cells[0] == "model") continue;  // header
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != 5) throw UsageError(where + ": expected model,dataset,sample,radius,norm");
    BenchTask t;
    t.model = resolve(cells[0]);
    t.dataset = resolve(cells[1]);
    try {
      std::size_t used = 0;
      const long long sample = std::stoll(cells[2], &used);
      if (used != cells[2].size() || sample < 1) throw std::invalid_argument(cells[2]);
      t.sample = static_cast<std::size_t>(sample);
      const long long radius = std::stoll(cells[3], &used);
      if (used != cells[3].size() || radius < 0) throw std::invalid_argument(cells[3]);
      t.radius = radius;
      t.norm = parse_norm(cells[4]);
    } catch (const std::exception&) {
      throw UsageError(where + ": malformed task row");
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

int cmd_bench(const TaskOptions& o, const BenchFlags& f, std::ostream& out) {
  if (o.timeout < 0) throw UsageError("--timeout must be non-negative");
  if (f.threads < 1) throw UsageError("--threads must be >= 1");
  const PropertyKind kind = parse_property_kind(o.property);
  const std::vector<BenchTask> tasks = read_tasks(f.tasks);

  // Load every model and dataset once, up front, so workers share them.
  std::map<std::string, QuantizedNetwork> models;
  std::map<std::pair<std::string, std::string>, std::vector<Sample>> datasets;
  std::vector<InputRegionSpec> regions;
  for (const auto& t : tasks) {
    auto it = models.find(t.model);
    if (it == models.end()) it = models.emplace(t.model, load_qnn(t.model)).first;
    const QuantizedNetwork& qnn = it->second;
    auto key = std::make_pair(t.model, t.dataset);
    auto ds = datasets.find(key);
    if (ds == datasets.end()) {
      ds = datasets.emplace(key, load_dataset(t.dataset, qnn.cfg_in(), o.raw, qnn.input_size())).first;
    }
    if (t.sample > ds->second.size()) throw UsageError(t.dataset + ": no sample " + std::to_string(t.sample));
    regions.push_back({ds->second[t.sample - 1].values, t.radius, t.norm});
    validate_region(regions.back(), qnn.cfg_in());
  }

  std::vector<RunReport> reports(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        VerifyOptions options;
        options.use_interval_analysis = !o.no_ia;
        options.deadline = deadline_after(o.timeout);
        const Verdict v = verify_robustness(models.at(tasks[i].model), regions[i], kind, options);
        reports[i] = make_report(i + 1, tasks[i].model, tasks[i].dataset, tasks[i].sample, regions[i], kind, !o.no_ia, v);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::min<unsigned>(f.threads, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size())));
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::ostringstream csv;
  write_csv_header(csv);
  for (const auto& r : reports) write_csv_row(csv, r);
  write_csv_summary(csv, reports);
  write_output(f.output, csv.str(), out);
  if (!o.report.empty()) write_output(o.report, reports_to_json("bench", reports), out);
  const bool timed_out = std::any_of(reports.begin(), reports.end(),
                                     [](const RunReport& r) { return r.verdict == VerdictStatus::kTimeout; });
  return timed_out ? kExitTimeout : kExitOk;
}

void add_model_flags(CLI::App& cmd, TaskOptions& o) {
  cmd.add_option("--model", o.model, "Quantized model JSON")->required();
  cmd.add_option("--input", o.input, "Dataset CSV: label, v_1, ..., v_n")->required();
  cmd.add_flag("--raw", o.raw, "Dataset values are reals, quantized with the model's input config");
}

void add_region_flags(CLI::App& cmd, TaskOptions& o) {
  cmd.add_option("--norm", o.norm, "Region norm: 0, 1, 2 or inf")->capture_default_str();
  cmd.add_option("--property", o.property, "class (misclassification) or output (output difference)")
      ->capture_default_str();
  cmd.add_flag("--no-ia", o.no_ia, "Disable interval analysis");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robustness verification for quantized ReLU networks", "qnnv"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qnnv 0.1.0");

  TaskOptions task;
  MrrFlags mrr;
  EncodeFlags encode;
  QuantizeFlags quantize;
  BenchFlags bench;
  bench.threads = default_threads();

  CLI::App* verify_cmd = app.add_subcommand("verify", "Verify robustness around every sample");
  add_model_flags(*verify_cmd, task);
  add_region_flags(*verify_cmd, task);
  verify_cmd->add_option("--radius", task.radius, "Region radius")->required();
  verify_cmd->add_option("--sample", task.samples, "1-based sample ids (default: all)");
  verify_cmd->add_option("--timeout", task.timeout, "Seconds per sample")->capture_default_str();
  verify_cmd->add_option("--report", task.report, "Write a JSON report here ('-' for stdout)");

  CLI::App* mrr_cmd = app.add_subcommand("mrr", "Maximum robustness radius per sample");
  add_model_flags(*mrr_cmd, task);
  add_region_flags(*mrr_cmd, task);
  mrr_cmd->add_option("--start-r", mrr.start_r, "Initial upper radius")->capture_default_str();
  mrr_cmd->add_option("--step", mrr.step, "Range expansion step")->capture_default_str();
  mrr_cmd->add_option("--bucket", mrr.bucket, "Histogram bucket width")->capture_default_str();
  mrr_cmd->add_option("--sample", task.samples, "1-based sample ids (default: all)");
  mrr_cmd->add_option("--timeout", task.timeout, "Seconds per sample")->capture_default_str();
  mrr_cmd->add_option("--report", task.report, "Write a JSON report here ('-' for stdout)");

  CLI::App* encode_cmd = app.add_subcommand("encode", "Export the verification model in LP format");
  add_model_flags(*encode_cmd, task);
  add_region_flags(*encode_cmd, task);
  encode_cmd->add_option("--radius", task.radius, "Region radius")->required();
  encode_cmd->add_option("--sample", encode.sample, "1-based sample id")->capture_default_str();
  encode_cmd->add_option("--output,-o", encode.output, "LP file ('-' for stdout)");

  CLI::App* quantize_cmd = app.add_subcommand("quantize", "Quantize a real-valued model");
  quantize_cmd->add_option("--real", quantize.real, "Real model JSON (layers_real)")->required();
  quantize_cmd->add_option("--output,-o", quantize.output, "Quantized model JSON ('-' for stdout)");
  quantize_cmd->add_option("--preset", quantize.preset, "Q: in <+,8,8>, w <+-,Q,Q-1>, b <+-,Q,Q-2>, out <+,Q,Q-2>")
      ->check(CLI::IsMember({4, 6, 8, 10}));
  quantize_cmd->add_option("--cfg-in", quantize.cfg_in, "Input config, e.g. +,6,4");
  quantize_cmd->add_option("--cfg-w", quantize.cfg_w, "Weight config, e.g. +-,6,4");
  quantize_cmd->add_option("--cfg-b", quantize.cfg_b, "Bias config");
  quantize_cmd->add_option("--cfg-out", quantize.cfg_out, "Output config of every layer");
  quantize_cmd->add_option("--cfg-out-hidden", quantize.cfg_out_hidden, "Output config of hidden layers");
  quantize_cmd->add_option("--cfg-out-last", quantize.cfg_out_last, "Output config of the last layer");
  quantize_cmd->add_flag("--allow-clamp", quantize.allow_clamp, "Saturate parameters outside their grids");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Accuracy of a model on a labeled dataset");
  add_model_flags(*eval_cmd, task);

  CLI::App* bench_cmd = app.add_subcommand("bench", "Run a task list and emit a CSV report");
  bench_cmd->add_option("--tasks", bench.tasks, "CSV rows: model,dataset,sample,radius,norm")->required();
  bench_cmd->add_flag("--raw", task.raw, "Datasets hold real values");
  bench_cmd->add_option("--property", task.property, "class or output")->capture_default_str();
  bench_cmd->add_flag("--no-ia", task.no_ia, "Disable interval analysis");
  bench_cmd->add_option("--threads", bench.threads, "Concurrent tasks (default: $QNNV_THREADS or 1)")
      ->capture_default_str();
  bench_cmd->add_option("--timeout", task.timeout, "Seconds per task")->capture_default_str();
  bench_cmd->add_option("--output,-o", bench.output, "CSV file ('-' for stdout)");
  bench_cmd->add_option("--report", task.report, "Also write a JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*verify_cmd) return cmd_verify(task, out);
    if (*mrr_cmd) return cmd_mrr(task, mrr, out);
    if (*encode_cmd) return cmd_encode(task, encode, out);
    if (*quantize_cmd) return cmd_quantize(quantize, out, err);
    if (*eval_cmd) return cmd_eval(task, out);
    if (*bench_cmd) return cmd_bench(task, bench, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace qnnv::cli
