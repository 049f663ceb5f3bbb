#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qnnv/verify.hpp"

namespace qnnv::cli {

// One verification task as it appears in verify and bench reports.
struct RunReport {
  std::size_t task = 0;
  std::string model;
  std::string dataset;
  std::size_t sample = 0;  // 1-based row in the dataset
  int64_t radius = 0;
  Norm norm = Norm::kLinf;
  PropertyKind property = PropertyKind::kMisclassification;
  bool interval_analysis = true;
  VerdictStatus verdict = VerdictStatus::kTimeout;
  std::optional<IntVector> counterexample;
  VerdictStats stats;

  // 1 - network booleans / network booleans without interval analysis.
  double ia_reduction() const;
};

RunReport make_report(std::size_t task, const std::string& model, const std::string& dataset, std::size_t sample,
                      const InputRegionSpec& region, PropertyKind property, bool interval_analysis,
                      const Verdict& verdict);

// Human-readable line: "sample 3: non-robust at (5, 2)".
std::string verdict_line(const RunReport& r);

// JSON document {"command": ..., "tasks": [...]}.
std::string reports_to_json(const std::string& command, const std::vector<RunReport>& reports);

const std::vector<std::string>& csv_columns();
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const RunReport& r);
// Final row: verdict column holds the success rate, solve_s the summed solve
// time of the tasks that did not time out.
void write_csv_summary(std::ostream& out, const std::vector<RunReport>& reports);

std::string format_fixed(double value, int digits);

}  // namespace qnnv::cli
