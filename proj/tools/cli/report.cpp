#include "report.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qnnv::cli {

namespace {

std::string join(const IntVector& v, const char* sep) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? sep : "") << v[i];
  return out.str();
}

}  // namespace

double RunReport::ia_reduction() const {
  if (stats.full_network_booleans == 0) return 0.0;
  return 1.0 - static_cast<double>(stats.network_booleans) / static_cast<double>(stats.full_network_booleans);
}

RunReport make_report(std::size_t task, const std::string& model, const std::string& dataset, std::size_t sample,
                      const InputRegionSpec& region, PropertyKind property, bool interval_analysis,
                      const Verdict& verdict) {
  RunReport r;
  r.task = task;
  r.model = model;
  r.dataset = dataset;
  r.sample = sample;
  r.radius = region.radius;
  r.norm = region.norm;
  r.property = property;
  r.interval_analysis = interval_analysis;
  r.verdict = verdict.status;
  r.counterexample = verdict.counterexample;
  r.stats = verdict.stats;
  return r;
}

std::string verdict_line(const RunReport& r) {
  std::string line = "sample " + std::to_string(r.sample) + ": " + to_string(r.verdict);
  if (r.counterexample) line += " at (" + join(*r.counterexample, ", ") + ")";
  return line;
}

std::string reports_to_json(const std::string& command, const std::vector<RunReport>& reports) {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  doc["tasks"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json t;
    t["task"] = r.task;
    t["model"] = r.model;
    t["dataset"] = r.dataset;
    t["sample"] = r.sample;
    t["radius"] = r.radius;
    t["norm"] = to_string(r.norm);
    t["property"] = to_string(r.property);
    t["interval_analysis"] = r.interval_analysis;
    t["verdict"] = to_string(r.verdict);
    t["counterexample"] = r.counterexample ? nlohmann::ordered_json(*r.counterexample) : nlohmann::ordered_json();
    t["encode_seconds"] = r.stats.encode_seconds;
    t["solve_seconds"] = r.stats.solve_seconds;
    t["booleans"] = r.stats.booleans;
    t["network_booleans"] = r.stats.network_booleans;
    t["full_network_booleans"] = r.stats.full_network_booleans;
    t["product_terms"] = r.stats.product_terms;
    t["ia_reduction"] = r.ia_reduction();
    t["nodes"] = r.stats.nodes;
    doc["tasks"].push_back(std::move(t));
  }
  return doc.dump(2) + "\n";
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns{
      "task",     "model",           "dataset",  "sample",           "radius",
      "norm",     "property",        "ia",       "verdict",          "counterexample",
      "encode_s", "solve_s",         "booleans", "network_booleans", "full_network_booleans",
      "product_terms", "ia_reduction", "nodes"};
  return columns;
}

void write_csv_header(std::ostream& out) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

void write_csv_row(std::ostream& out, const RunReport& r) {
  out << r.task << ',' << r.model << ',' << r.dataset << ',' << r.sample << ',' << r.radius << ','
      << to_string(r.norm) << ',' << (r.property == PropertyKind::kOutputDifference ? "output" : "class") << ','
      << (r.interval_analysis ? 1 : 0) << ',' << to_string(r.verdict) << ','
      << (r.counterexample ? join(*r.counterexample, " ") : "") << ',' << format_fixed(r.stats.encode_seconds, 6)
      << ',' << format_fixed(r.stats.solve_seconds, 6) << ',' << r.stats.booleans << ',' << r.stats.network_booleans
      << ',' << r.stats.full_network_booleans << ',' << r.stats.product_terms << ','
      << format_fixed(r.ia_reduction(), 4) << ',' << r.stats.nodes << '\n';
}

void write_csv_summary(std::ostream& out, const std::vector<RunReport>& reports) {
  std::size_t solved = 0;
  double solve_time = 0;
  for (const auto& r : reports) {
    if (r.verdict == VerdictStatus::kTimeout) continue;
    ++solved;
    solve_time += r.stats.solve_seconds;
  }
  const double rate = reports.empty() ? 0.0 : 100.0 * static_cast<double>(solved) / static_cast<double>(reports.size());
  out << "summary,,,," << ",,,," << "sr=" << format_fixed(rate, 1) << "%," << ',' << ',' << format_fixed(solve_time, 6);
  for (std::size_t i = 12; i < csv_columns().size(); ++i) out << ',';
  out << '\n';
}

}  // namespace qnnv::cli
