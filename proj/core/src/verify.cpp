#include "qnnv/verify.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "qnnv/encoder.hpp"
#include "qnnv/solver.hpp"

namespace qnnv {

const char* to_string(PropertyKind k) {
  return k == PropertyKind::kOutputDifference ? "output-difference" : "misclassification";
}

PropertyKind parse_property_kind(const std::string& text) {
  if (text == "output" || text == "output-difference") return PropertyKind::kOutputDifference;
  if (text == "class" || text == "misclassification") return PropertyKind::kMisclassification;
  throw std::invalid_argument("unknown property kind '" + text + "'");
}

const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::kRobust: return "robust";
    case VerdictStatus::kNonRobust: return "non-robust";
    case VerdictStatus::kTimeout: return "timeout";
  }
  return "?";
}

const char* to_string(MrrResult::Status s) {
  switch (s) {
    case MrrResult::Status::kComplete: return "complete";
    case MrrResult::Status::kSaturated: return "saturated";
    case MrrResult::Status::kTimeout: return "timeout";
  }
  return "?";
}

namespace {

PropertySpec property_for(const QuantizedNetwork& qnn, const IntVector& center, PropertyKind kind) {
  IntVector reference = qnn_forward(qnn, center);
  if (kind == PropertyKind::kOutputDifference) return PropertySpec::output_difference(std::move(reference));
  return PropertySpec::misclassification(classify(reference), reference.size());
}

bool violates(const QuantizedNetwork& qnn, const IntVector& reference, std::size_t reference_class,
              const IntVector& x, PropertyKind kind) {
  IntVector out = qnn_forward(qnn, x);
  return kind == PropertyKind::kOutputDifference ? out != reference : classify(out) != reference_class;
}

// Depth-first walk over the region's grid points in lexicographic order. The
// visitor returns false to stop.
class RegionWalker {
 public:
  RegionWalker(const InputRegionSpec& region, const QuantConfig& cfg_in) : region_(region), cfg_(cfg_in) {
    point_ = region.center;
  }

  template <typename Visit>
  bool walk(Visit&& visit) {
    const int64_t r = region_.radius;
    int64_t budget = region_.norm == Norm::kL2 ? r * r : r;
    return step(0, budget, visit);
  }

 private:
  template <typename Visit>
  bool step(std::size_t i, int64_t budget, Visit& visit) {
    if (i == point_.size()) return visit(static_cast<const IntVector&>(point_));
    const int64_t c = region_.center[i];
    int64_t lo = c;
    int64_t hi = c;
    switch (region_.norm) {
      case Norm::kLinf:
      case Norm::kL1:
        lo = c - budget;
        hi = c + budget;
        break;
      case Norm::kL2: {
        int64_t d = 0;
        while ((d + 1) * (d + 1) <= budget) ++d;
        lo = c - d;
        hi = c + d;
        break;
      }
      case Norm::kL0:
        if (budget > 0) {
          lo = cfg_.lb();
          hi = cfg_.ub();
        }
        break;
    }
    lo = std::max(lo, cfg_.lb());
    hi = std::min(hi, cfg_.ub());
    for (int64_t v = lo; v <= hi; ++v) {
      const int64_t d = v > c ? v - c : c - v;
      int64_t rest = budget;
      if (region_.norm == Norm::kL1) rest -= d;
      if (region_.norm == Norm::kL2) rest -= d * d;
      if (region_.norm == Norm::kL0 && d != 0) rest -= 1;
      point_[i] = v;
      if (!step(i + 1, rest, visit)) return false;
    }
    point_[i] = c;
    return true;
  }

  const InputRegionSpec& region_;
  const QuantConfig& cfg_;
  IntVector point_;
};

}  // namespace

Verdict verify_robustness(const QuantizedNetwork& qnn, const InputRegionSpec& region, PropertyKind kind,
                          const VerifyOptions& options) {
  validate_region(region, qnn.cfg_in());
  if (region.center.size() != qnn.input_size()) throw std::invalid_argument("input arity does not match the network");

  Verdict verdict;
  verdict.stats.full_network_booleans = full_network_booleans(qnn);
  if (region.radius == 0) {
    verdict.status = VerdictStatus::kRobust;
    return verdict;
  }

  const auto encode_start = Clock::now();
  BuildOptions build;
  build.use_interval_analysis = options.use_interval_analysis;
  Encoding enc = build_verification_model(qnn, region, property_for(qnn, region.center, kind), build);
  verdict.stats.encode_seconds = seconds_since(encode_start);
  verdict.stats.booleans = enc.booleans();
  verdict.stats.network_booleans = enc.network_booleans;
  verdict.stats.product_terms = enc.product_terms;

  ilp::SolveOptions solve_options;
  solve_options.deadline = options.deadline;
  solve_options.node_limit = options.node_limit;
  ilp::SolveResult result = ilp::solve(enc.model, solve_options);
  verdict.stats.solve_seconds = result.stats.seconds;
  verdict.stats.nodes = result.stats.nodes;

  switch (result.status) {
    case ilp::SolveStatus::kInfeasible:
      verdict.status = VerdictStatus::kRobust;
      break;
    case ilp::SolveStatus::kTimeout:
      verdict.status = VerdictStatus::kTimeout;
      break;
    case ilp::SolveStatus::kFeasible: {
      IntVector x;
      for (ilp::VarId v : enc.inputs) x.push_back(result.assignment->at(static_cast<std::size_t>(v.value)));
      if (!validate_counterexample(qnn, region, x, kind)) {
        throw std::logic_error("solver returned a point that is not a counterexample");
      }
      verdict.status = VerdictStatus::kNonRobust;
      verdict.counterexample = std::move(x);
      break;
    }
  }
  return verdict;
}

uint64_t region_size(const InputRegionSpec& region, const QuantConfig& cfg_in, uint64_t cap) {
  validate_region(region, cfg_in);
  uint64_t count = 0;
  RegionWalker(region, cfg_in).walk([&](const IntVector&) { return ++count <= cap; });
  return count;
}

Verdict brute_force_verify(const QuantizedNetwork& qnn, const InputRegionSpec& region, PropertyKind kind,
                           uint64_t cap) {
  validate_region(region, qnn.cfg_in());
  if (region.center.size() != qnn.input_size()) throw std::invalid_argument("input arity does not match the network");
  if (region_size(region, qnn.cfg_in(), cap) > cap) {
    throw std::length_error("region has more than " + std::to_string(cap) + " points");
  }
  const IntVector reference = qnn_forward(qnn, region.center);
  const std::size_t reference_class = classify(reference);

  Verdict verdict;
  verdict.status = VerdictStatus::kRobust;
  const auto start = Clock::now();
  RegionWalker(region, qnn.cfg_in()).walk([&](const IntVector& x) {
    ++verdict.stats.evaluations;
    if (!violates(qnn, reference, reference_class, x, kind)) return true;
    verdict.status = VerdictStatus::kNonRobust;
    verdict.counterexample = x;
    return false;
  });
  verdict.stats.solve_seconds = seconds_since(start);
  return verdict;
}

bool validate_counterexample(const QuantizedNetwork& qnn, const InputRegionSpec& region, const IntVector& x,
                             PropertyKind kind) {
  if (x.size() != qnn.input_size() || region.center.size() != x.size()) return false;
  if (!in_region(region, x, qnn.cfg_in())) return false;
  const IntVector reference = qnn_forward(qnn, region.center);
  return violates(qnn, reference, classify(reference), x, kind);
}

MrrResult search_mrr(const RadiusProbe& probe, int64_t start_r, int64_t step, int64_t cap) {
  if (start_r < 1 || step < 1 || cap < 1) throw std::invalid_argument("start_r, step and cap must be at least 1");
  MrrResult result;
  std::map<int64_t, VerdictStatus> seen;
  auto check = [&](int64_t r) {
    auto it = seen.find(r);
    if (it != seen.end()) return it->second;
    VerdictStatus s = probe(r);
    seen.emplace(r, s);
    result.probes.push_back({r, s});
    return s;
  };

  VerdictStatus first = check(1);
  if (first == VerdictStatus::kNonRobust) {
    result.status = MrrResult::Status::kComplete;
    result.radius = 0;
    return result;
  }
  if (first == VerdictStatus::kTimeout) return result;

  // Range expansion: robust at lb, then find an upper probe that is not.
  int64_t lb = 1;
  int64_t ub = std::min(start_r, cap);
  for (;;) {
    if (ub <= lb) {
      result.status = MrrResult::Status::kSaturated;
      result.radius = lb;
      return result;
    }
    VerdictStatus s = check(ub);
    if (s == VerdictStatus::kTimeout) {
      result.radius = lb;
      return result;
    }
    if (s == VerdictStatus::kNonRobust) break;
    lb = ub;
    ub = std::min(ub + step, cap);
  }

  // Binary search keeping robust at lb, non-robust at ub.
  while (ub != lb + 1) {
    const int64_t mid = lb + (ub - lb) / 2;
    VerdictStatus s = check(mid);
    if (s == VerdictStatus::kTimeout) {
      result.radius = lb;
      return result;
    }
    if (s == VerdictStatus::kNonRobust) {
      ub = mid;
    } else {
      lb = mid;
    }
  }
  result.status = MrrResult::Status::kComplete;
  result.radius = lb;
  return result;
}

MrrResult compute_mrr(const QuantizedNetwork& qnn, const IntVector& center, Norm norm, const MrrOptions& options) {
  InputRegionSpec base{center, 0, norm};
  validate_region(base, qnn.cfg_in());
  const int64_t cap = std::max<int64_t>(1, covering_radius(center, norm, qnn.cfg_in()));
  VerifyOptions verify_options;
  verify_options.use_interval_analysis = options.use_interval_analysis;
  verify_options.deadline = options.deadline;
  auto probe = [&](int64_t r) {
    return verify_robustness(qnn, InputRegionSpec{center, r, norm}, options.kind, verify_options).status;
  };
  return search_mrr(probe, options.start_r, options.step, cap);
}

}  // namespace qnnv
