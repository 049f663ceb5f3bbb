#pragma once

#include <cstdint>
#include <optional>

#include "qnnv/deadline.hpp"
#include "qnnv/ilp.hpp"

namespace qnnv::ilp {

enum class SolveStatus { kFeasible, kInfeasible, kTimeout };

const char* to_string(SolveStatus s);

struct SolveStats {
  uint64_t nodes = 0;
  uint64_t pivots = 0;
  double seconds = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kTimeout;
  std::optional<Assignment> assignment;  // present iff feasible
  SolveStats stats;
};

struct SolveOptions {
  Deadline deadline = no_deadline();
  // 0 means unlimited; hitting the limit reports a timeout.
  uint64_t node_limit = 0;
  // Bound propagation on integer rows before every relaxation solve.
  bool propagate = true;
};

// Depth-first branch-and-bound over the exact rational relaxation.
// Branches on the most fractional variable (lowest id on ties) and explores
// the child nearest to the relaxation value first. Quadratic rows are checked
// at integral points and split on a violating coordinate.
// The model is normalized internally if needed.
SolveResult solve(const IlpModel& model, const SolveOptions& options = {});

}  // namespace qnnv::ilp
