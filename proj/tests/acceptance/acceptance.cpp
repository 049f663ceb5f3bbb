// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qnnv/encoder.hpp"
#include "qnnv/interval.hpp"
#include "qnnv/model_io.hpp"
#include "qnnv/solver.hpp"
#include "qnnv/verify.hpp"
#include "test_support.hpp"

using namespace qnnv;
using ilp::LinearExpr;
using ilp::Relation;
using ilp::SolveStatus;

namespace {

namespace fs = std::filesystem;

const std::string kData = QNNV_DATA_DIR;
const std::string kGolden = QNNV_GOLDEN_DIR;
const std::string kPython = QNNV_PYTHON;
const std::string kExternalCheck = QNNV_EXTERNAL_CHECK;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first few failures; later ones only bump the count.
class Failures {
 public:
  void add(const std::string& what) {
    if (count_++ < 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  bool any() const { return count_ != 0; }
  Outcome outcome(const std::string& ok) const {
    if (!any()) return {true, ok};
    return {false, std::to_string(count_) + " failure(s): " + notes_};
  }

 private:
  std::size_t count_ = 0;
  std::string notes_;
};

std::string str(const IntVector& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + ")";
}

Outcome running_example() {
  Failures f;
  const int64_t q = quantize_value(parse_rational("1.2345"), QuantConfig(Signedness::kSigned, 4, 2));
  if (q != 5) f.add("quantize_value(1.2345, <+-,4,2>) = " + std::to_string(q));
  const QuantizedNetwork qnn = load_qnn(kData + "/running_example.json");
  const auto layers = qnn_forward_layers(qnn, {10, 2});
  if (layers.size() != 3 || layers[1] != IntVector{3, 17}) f.add("hidden " + str(layers.at(1)));
  if (layers.back() != IntVector{8, 10}) f.add("output " + str(layers.back()));
  if (classify(layers.back()) != 2) f.add("class " + std::to_string(classify(layers.back())));
  return f.outcome("q=5, hidden (3,17), output (8,10), class 2");
}

Outcome region_fixture() {
  Failures f;
  const QuantizedNetwork qnn = load_qnn(kData + "/running_example.json");
  const InputRegionSpec region{{10, 2}, 4, Norm::kLinf};
  Encoding enc;
  add_input_variables(qnn, enc);
  encode_input_region(region, qnn.cfg_in(), enc);
  const auto& x1 = enc.model.variable(enc.inputs[0]);
  const auto& x2 = enc.model.variable(enc.inputs[1]);
  if (x1.lower != 6 || x1.upper != 14 || x2.lower != 0 || x2.upper != 6) f.add("input bounds differ");
  if (enc.region_constraints != 0 || !enc.model.constraints().empty()) f.add("box region added rows");
  const auto iv = input_intervals(region, qnn.cfg_in());
  if (iv.size() != 2 || iv[0] != Interval{6, 14} || iv[1] != Interval{0, 6}) f.add("input_intervals differ");
  return f.outcome("6 <= x1 <= 14, 0 <= x2 <= 6; intervals [6,14] x [0,6]");
}

Outcome staircase_suite() {
  Failures f;
  testing::Rng rng(1001);
  std::size_t points = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const PiecewiseConstant pcf = testing::random_pcf(rng, 6, -20, 20);
    for (BigMPolicy policy : {BigMPolicy::kBoundDerived, BigMPolicy::kGlobal}) {
      ilp::IlpModel m;
      m.set_big_m(1000);
      const auto x = m.add_integer(-30, 30, "x");
      const auto y = m.add_integer(-20, 20, "y");
      const auto v = encode_piecewise_constant(pcf, LinearExpr::variable(x), y, m, "v", policy);
      const std::size_t k = v.size();
      ilp::Assignment a(m.num_variables(), 0);
      for (int64_t xv = -22; xv <= 22; ++xv) {
        if (!pcf.in_domain(Rational(static_cast<long>(xv)))) continue;
        ++points;
        const int64_t fx = pcf(Rational(static_cast<long>(xv)));
        a[static_cast<std::size_t>(x.value)] = xv;
        // Every selector pattern, with y both at the value the pattern
        // names and one above it.
        std::size_t satisfied = 0;
        for (uint32_t mask = 0; mask < (1u << k); ++mask) {
          int64_t named = 0;
          for (std::size_t i = 0; i < k; ++i) {
            const int64_t bit = (mask >> i) & 1;
            a[static_cast<std::size_t>(v[i].value)] = bit;
            named += bit * pcf.values[i];
          }
          for (int64_t yv : {named, named + 1}) {
            if (yv < -20 || yv > 20) continue;
            a[static_cast<std::size_t>(y.value)] = yv;
            if (!ilp::check_assignment(m, a)) continue;
            ++satisfied;
            if (yv != fx) f.add("f#" + std::to_string(trial) + " x=" + std::to_string(xv) + " admits y=" + std::to_string(yv));
          }
        }
        if (satisfied != 1) f.add("f#" + std::to_string(trial) + " x=" + std::to_string(xv) + " has " + std::to_string(satisfied) + " solutions");
      }
    }
  }
  return f.outcome("1000 functions, " + std::to_string(points) + " domain points, both big-M policies");
}

void check_size(const QuantizedNetwork& qnn, const Encoding& enc, Failures& f, std::size_t& checked) {
  ++checked;
  const std::size_t neurons = qnn.neuron_count();
  const std::size_t non_input = neurons - qnn.input_size();
  const int64_t span = std::max(qnn.cfg_out_hidden().ub() - qnn.cfg_out_hidden().lb(),
                                qnn.cfg_out_last().ub() - qnn.cfg_out_last().lb());
  if (enc.network_constraints > 4 * non_input) f.add("row bound exceeded");
  if (enc.network_variables > static_cast<std::size_t>(span + 2) * neurons) f.add("variable bound exceeded");
}

struct Suites {
  Outcome forward;
  Outcome oracle;
  Outcome ia;
  Failures size;
  std::size_t size_checked = 0;
  double forward_seconds = 0;
  double oracle_seconds = 0;
};

void forward_suite(Suites& s) {
  const auto start = Clock::now();
  Failures f;
  testing::Rng rng(2002);
  std::size_t runs = 0;
  for (int net = 0; net < 200; ++net) {
    const QuantizedNetwork qnn = testing::random_small_qnn(rng);
    for (int sample = 0; sample < 20; ++sample) {
      const IntVector x = testing::random_input(rng, qnn.cfg_in(), qnn.input_size());
      const IntVector expected = testing::oracle_forward(qnn, x);
      const InputRegionSpec region{x, static_cast<int64_t>(sample % 4), testing::random_norm(rng)};
      for (bool ia : {true, false}) {
        ++runs;
        Encoding enc;
        add_input_variables(qnn, enc);
        const IntervalBounds bounds = propagate(qnn, region);
        enc.model.set_big_m(global_big_m(qnn));
        encode_network(qnn, ia ? &bounds : nullptr, enc, ia ? BigMPolicy::kBoundDerived : BigMPolicy::kGlobal);
        check_size(qnn, enc, s.size, s.size_checked);
        for (std::size_t i = 0; i < x.size(); ++i) enc.model.set_bounds(enc.inputs[i], x[i], x[i]);
        const auto result = ilp::solve(enc.model);
        const std::string tag = "net " + std::to_string(net) + " x=" + str(x) + (ia ? " ia" : " no-ia");
        if (result.status != SolveStatus::kFeasible) {
          f.add(tag + ": no solution");
          continue;
        }
        IntVector got;
        for (const auto& out : enc.outputs()) got.push_back(out.value(*result.assignment));
        if (got != expected) f.add(tag + ": " + str(got) + " vs " + str(expected));
        // Nothing else fits: each free output is pinned from both sides.
        for (std::size_t j = 0; j < expected.size(); ++j) {
          if (enc.outputs()[j].is_fixed()) continue;
          for (int side : {-1, 1}) {
            ilp::IlpModel other = enc.model;
            const LinearExpr bound(Rational(static_cast<long>(expected[j] + side)));
            other.add_constraint(enc.outputs()[j].expr(), side > 0 ? Relation::kGreaterEqual : Relation::kLessEqual, bound);
            if (ilp::solve(other).status != SolveStatus::kInfeasible) f.add(tag + ": output " + std::to_string(j + 1) + " not unique");
          }
        }
      }
    }
  }
  s.forward_seconds = seconds_since(start);
  s.forward = f.outcome(std::to_string(runs) + " pinned encodings match the oracle forward pass");
  if (s.forward.pass && s.forward_seconds > 300) s.forward = {false, "took longer than 5 min"};
}

void oracle_suite(Suites& s) {
  const auto start = Clock::now();
  Failures f;
  Failures ia_fail;
  testing::Rng rng(3003);
  std::size_t non_robust = 0;
  std::size_t small_r = 0;
  std::size_t strict = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const QuantizedNetwork qnn = testing::random_small_qnn(rng);
    const IntVector c = testing::random_input(rng, qnn.cfg_in(), qnn.input_size());
    const InputRegionSpec region{c, 1 + trial % 3, static_cast<Norm>(trial % 4)};
    const PropertyKind kind = (trial / 4) % 2 ? PropertyKind::kOutputDifference : PropertyKind::kMisclassification;
    const std::string tag = "#" + std::to_string(trial);

    const Verdict truth = brute_force_verify(qnn, region, kind);
    Verdict with, without;
    for (bool ia : {true, false}) {
      VerifyOptions options;
      options.use_interval_analysis = ia;
      Verdict& v = ia ? with : without;
      try {
        v = verify_robustness(qnn, region, kind, options);
      } catch (const std::exception& e) {
        f.add(tag + ": " + e.what());
        continue;
      }
      if (v.status != truth.status) f.add(tag + (ia ? " ia" : " no-ia") + ": " + to_string(v.status) + " vs " + to_string(truth.status));
      if (v.counterexample && !validate_counterexample(qnn, region, *v.counterexample, kind)) f.add(tag + ": bad counterexample");
      if (v.status == VerdictStatus::kNonRobust && !v.counterexample) f.add(tag + ": missing counterexample");
      BuildOptions build;
      build.use_interval_analysis = ia;
      const IntVector ref = qnn_forward(qnn, c);
      const PropertySpec prop = kind == PropertyKind::kOutputDifference
                                    ? PropertySpec::output_difference(ref)
                                    : PropertySpec::misclassification(classify(ref), ref.size());
      check_size(qnn, build_verification_model(qnn, region, prop, build), s.size, s.size_checked);
    }
    non_robust += truth.status == VerdictStatus::kNonRobust;

    if (with.stats.booleans > without.stats.booleans) ia_fail.add(tag + ": more booleans with interval analysis");
    if (with.status != without.status) ia_fail.add(tag + ": verdicts differ");
    if (region.radius <= 2) {
      ++small_r;
      strict += with.stats.booleans < without.stats.booleans;
    }
  }
  s.oracle_seconds = seconds_since(start);
  s.oracle = f.outcome("300 instances agree with brute force (" + std::to_string(non_robust) + " non-robust)");
  if (s.oracle.pass && s.oracle_seconds > 900) s.oracle = {false, "took longer than 15 min"};

  const double rate = small_r ? static_cast<double>(strict) / static_cast<double>(small_r) : 0.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "IA <= no-IA booleans on all 300; strict reduction on %zu/%zu (%.1f%%) at r <= 2", strict,
                small_r, 100 * rate);
  s.ia = ia_fail.outcome(buf);
  if (s.ia.pass && rate < 0.5) s.ia = {false, std::string(buf) + ", below 50%"};
}

Outcome mrr_suite() {
  Failures f;
  testing::Rng rng(4004);
  std::size_t saturated = 0;
  std::size_t zero = 0;
  std::size_t draws = 0;
  std::map<int64_t, std::size_t> radii;
  for (int trial = 0; trial < 50; ++trial) {
    // Redraw until the class changes somewhere on the grid; a network with
    // one class everywhere only exercises the saturation path.
    const Norm p = static_cast<Norm>(trial % 4);
    QuantizedNetwork qnn;
    IntVector c;
    do {
      ++draws;
      qnn = testing::random_small_qnn(rng);
      c = testing::random_input(rng, qnn.cfg_in(), qnn.input_size());
    } while (brute_force_verify(qnn, {c, covering_radius(c, p, qnn.cfg_in()), p}, PropertyKind::kMisclassification)
                 .status == VerdictStatus::kRobust);
    const MrrResult r = compute_mrr(qnn, c, p);  // start_r = step = 10
    const std::string tag = "#" + std::to_string(trial);
    if (r.status == MrrResult::Status::kTimeout) {
      f.add(tag + ": timeout");
      continue;
    }
    const auto at = [&](int64_t radius) { return brute_force_verify(qnn, {c, radius, p}, PropertyKind::kMisclassification).status; };
    if (r.radius == 0) {
      ++zero;
      if (at(1) != VerdictStatus::kNonRobust) f.add(tag + ": 0 but robust at 1");
      continue;
    }
    ++radii[r.radius];
    if (at(r.radius) != VerdictStatus::kRobust) f.add(tag + ": not robust at " + std::to_string(r.radius));
    if (r.status == MrrResult::Status::kSaturated) {
      // The region already covers the grid, so no larger radius can fail.
      ++saturated;
      if (r.radius < covering_radius(c, p, qnn.cfg_in())) f.add(tag + ": saturated below the covering radius");
    } else if (at(r.radius + 1) != VerdictStatus::kNonRobust) {
      f.add(tag + ": robust at " + std::to_string(r.radius + 1));
    }
  }
  std::string spread;
  for (const auto& [radius, n] : radii) spread += " " + std::to_string(radius) + "x" + std::to_string(n);
  return f.outcome("50 instances from " + std::to_string(draws) + " draws; " + std::to_string(zero) + " at 0," + spread +
                   (saturated ? ", " + std::to_string(saturated) + " saturated" : ""));
}

Outcome interval_suite() {
  Failures f;
  testing::Rng rng(5005);
  std::uniform_int_distribution<int> coin(0, 1);
  std::size_t checked = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    testing::RandomQnnShape shape;
    shape.inputs = static_cast<std::size_t>(1 + trial % 3);
    shape.hidden = coin(rng) ? std::vector<std::size_t>{3} : std::vector<std::size_t>{3, 2};
    shape.outputs = 2;
    shape.bits = 3 + trial % 4;
    const QuantizedNetwork qnn = testing::random_qnn(rng, shape);
    const IntVector c = testing::random_input(rng, qnn.cfg_in(), shape.inputs);
    const InputRegionSpec region{c, static_cast<int64_t>(trial % 5), testing::random_norm(rng)};
    // A random point of the region: perturb and keep only members.
    IntVector x = c;
    std::uniform_int_distribution<int64_t> delta(-region.radius, region.radius);
    for (int attempt = 0; attempt < 20; ++attempt) {
      IntVector cand = c;
      for (auto& v : cand) v += delta(rng);
      if (testing::oracle_in_region(c, cand, region.radius, region.norm, qnn.cfg_in())) {
        x = cand;
        break;
      }
    }
    const IntervalBounds b = propagate(qnn, region);
    const auto values = testing::oracle_forward_layers(qnn, x);
    for (std::size_t k = 0; k < values.size(); ++k) {
      for (std::size_t j = 0; j < values[k].size(); ++j) {
        ++checked;
        if (!b.layers[k][j].contains(values[k][j])) f.add("#" + std::to_string(trial) + " layer " + std::to_string(k));
      }
    }
  }
  return f.outcome(std::to_string(checked) + " neuron values inside their bounds");
}

std::string encode_lp(const QuantizedNetwork& qnn, const InputRegionSpec& region, PropertyKind kind, bool ia) {
  const IntVector ref = qnn_forward(qnn, region.center);
  const PropertySpec prop = kind == PropertyKind::kOutputDifference
                                ? PropertySpec::output_difference(ref)
                                : PropertySpec::misclassification(classify(ref), ref.size());
  return ilp::export_lp(build_verification_model(qnn, region, prop, {ia, true}).model);
}

Outcome lp_export() {
  Failures f;
  const QuantizedNetwork qnn = load_qnn(kData + "/running_example.json");
  const InputRegionSpec region{{10, 2}, 4, Norm::kLinf};
  const std::string lp = encode_lp(qnn, region, PropertyKind::kMisclassification, true);
  if (lp != encode_lp(qnn, region, PropertyKind::kMisclassification, true)) f.add("export is not deterministic");
  std::string golden;
  try {
    golden = read_text_file(kGolden + "/running_example_ia.lp");
  } catch (const std::exception& e) {
    f.add(e.what());
  }
  if (lp != golden) f.add("differs from the golden file");
  for (int i = 1; i <= 9; ++i) {
    if (lp.find(" v2_1_" + std::to_string(i) + "\n") == std::string::npos) f.add("selector v2_1_" + std::to_string(i) + " missing");
  }
  if (lp.find(" v2_1_10\n") != std::string::npos) f.add("more than 9 selectors for y2_1");
  if (lp.find("- 144 v2_1_9 <= -1") == std::string::npos) f.add("upper staircase row of y2_1 not found");

  // External solver on a batch of desk-scale exports with known status.
  const fs::path dir = fs::temp_directory_path() / ("qnnv_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  testing::Rng rng(6006);
  std::size_t exported = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const QuantizedNetwork q = testing::random_small_qnn(rng);
    const IntVector c = testing::random_input(rng, q.cfg_in(), q.input_size());
    // L2 needs a quadratic row, which LP files cannot carry portably.
    const InputRegionSpec reg{c, 1 + trial % 3, std::array{Norm::kLinf, Norm::kL1, Norm::kL0}[trial % 3]};
    const PropertyKind kind = trial % 2 ? PropertyKind::kOutputDifference : PropertyKind::kMisclassification;
    const bool ia = (trial / 2) % 2 == 0;
    const IntVector ref = qnn_forward(q, c);
    const PropertySpec prop = kind == PropertyKind::kOutputDifference
                                  ? PropertySpec::output_difference(ref)
                                  : PropertySpec::misclassification(classify(ref), ref.size());
    const Encoding enc = build_verification_model(q, reg, prop, {ia, true});
    const auto status = ilp::solve(enc.model).status;
    const std::string name = "m" + std::to_string(trial) + ".lp";
    std::ofstream(dir / name) << ilp::export_lp(enc.model);
    manifest << name << ' ' << (status == SolveStatus::kFeasible ? "feasible" : "infeasible") << '\n';
    ++exported;
  }
  manifest << "running.lp feasible\n";
  std::ofstream(dir / "running.lp") << lp;
  manifest.close();

  std::string external = "external solver unavailable";
  if (!kPython.empty()) {
    const std::string cmd = "\"" + kPython + "\" \"" + kExternalCheck + "\" \"" + (dir / "manifest.txt").string() + "\"";
    const int rc = std::system(cmd.c_str());
    const int code = rc == -1 ? -1 : WEXITSTATUS(rc);
    if (code == 0) {
      external = "HiGHS agrees on " + std::to_string(exported + 1) + " exports";
    } else if (code == 77) {
      external = "external solver unavailable, skipped";
    } else {
      f.add("external solver disagrees (exit " + std::to_string(code) + ")");
    }
  }
  fs::remove_all(dir);
  return f.outcome("golden file byte-identical, 9-selector staircase; " + external);
}

void report(int id, const std::string& title, const Outcome& o, double seconds, int& failed) {
  std::printf("%s  #%-2d %-34s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), seconds, o.detail.c_str());
  std::fflush(stdout);
  failed += !o.pass;
}

Outcome timed(const std::function<Outcome()>& fn, double limit, double& seconds) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  seconds = seconds_since(start);
  if (o.pass && seconds > limit) o = {false, o.detail + " (over the time limit)"};
  return o;
}

}  // namespace

// With arguments, only the listed criteria run (#6 needs #4 and #5).
int main(int argc, char** argv) {
  std::vector<bool> want(11, argc == 1);
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > 10) {
      std::fprintf(stderr, "usage: %s [criterion ...]\n", argv[0]);
      return 64;
    }
    want[static_cast<std::size_t>(id)] = true;
  }
  if (want[6]) want[4] = want[5] = true;
  if (want[7]) want[5] = true;

  int failed = 0;
  int ran = 0;
  double t = 0;
  auto run = [&](int id, const char* title, Outcome (*fn)(), double limit) {
    if (!want[static_cast<std::size_t>(id)]) return;
    ++ran;
    const Outcome o = timed(fn, limit, t);
    report(id, title, o, t, failed);
  };
  run(1, "running-example fixture", running_example, 1);
  run(2, "region fixture", region_fixture, 1);
  run(3, "staircase encoding exactness", staircase_suite, 60);

  Suites s;
  if (want[4]) {
    ++ran;
    try {
      forward_suite(s);
    } catch (const std::exception& e) {
      s.forward = {false, std::string("exception: ") + e.what()};
    }
    report(4, "encoding vs forward pass", s.forward, s.forward_seconds, failed);
  }
  if (want[5]) {
    ++ran;
    try {
      oracle_suite(s);
    } catch (const std::exception& e) {
      s.oracle = s.ia = {false, std::string("exception: ") + e.what()};
    }
    report(5, "verdicts vs brute force", s.oracle, s.oracle_seconds, failed);
  }
  if (want[6]) {
    ++ran;
    report(6, "encoding size bounds", s.size.outcome(std::to_string(s.size_checked) + " encodings within bounds"), 0,
           failed);
  }
  if (want[7]) {
    ++ran;
    report(7, "interval analysis effectiveness", s.ia, 0, failed);
  }
  run(8, "maximum robustness radius", mrr_suite, 600);
  run(9, "interval soundness", interval_suite, 120);
  run(10, "LP export", lp_export, 120);

  std::printf("%d of %d criteria failed\n", failed, ran);
  return failed;
}
