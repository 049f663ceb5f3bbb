#include "qnnv/solver.hpp"

#include <algorithm>
#include <cstdlib>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <vector>

#include "simplex.hpp"

namespace qnnv::ilp {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kTimeout: return "timeout";
  }
  return "?";
}

namespace {

using detail::BoundedSimplex;
using detail::Row;

struct Node {
  std::vector<int64_t> lower;
  std::vector<int64_t> upper;
};

Integer to_integer(int64_t v) { return Integer(static_cast<long>(v)); }

// Activity-based bound tightening. Rows `sum v = 1` over binaries mark
// one-hot groups; in every other row a group contributes exactly one of its
// coefficients (0 for members the row does not mention) instead of the sum of
// its negative ones, which lets a pinned staircase input fix its selectors.
class Propagator {
 public:
  Propagator(const std::vector<Row>& rows, const Node& root) : group_of_(root.lower.size(), -1) {
    for (const auto& r : rows) {
      const bool fresh = std::all_of(r.terms.begin(), r.terms.end(),
                                     [&](const auto& t) { return group_of_[static_cast<std::size_t>(t.first)] < 0; });
      if (fresh && is_group_row(r, root)) {
        const int g = static_cast<int>(groups_.size());
        groups_.emplace_back();
        for (const auto& t : r.terms) {
          group_of_[static_cast<std::size_t>(t.first)] = g;
          groups_.back().push_back(t.first);
        }
      }
    }
    for (const auto& r : rows) {
      const bool own = is_group_row(r, root) && group_of_[static_cast<std::size_t>(r.terms.front().first)] >= 0 &&
                       defines(r);
      add(r.terms, r.rhs, own);
      if (r.equality) {
        std::vector<std::pair<int, Integer>> neg;
        for (const auto& [v, c] : r.terms) neg.emplace_back(v, -c);
        add(neg, -r.rhs, own);
      }
    }
  }

  bool run(Node& node, int max_rounds) const {
    for (int round = 0; round < max_rounds; ++round) {
      bool changed = false;
      for (const auto& row : rows_) {
        if (!tighten(row, node, changed)) return false;
      }
      if (!changed) break;
    }
    return true;
  }

 private:
  struct GroupPart {
    int group = 0;
    std::vector<Integer> coeffs;  // aligned with groups_[group]; 0 when absent
  };
  struct PRow {
    std::vector<std::pair<int, Integer>> plain;
    std::vector<GroupPart> parts;
    Integer rhs;
  };

  static bool is_group_row(const Row& r, const Node& root) {
    if (!r.equality || r.rhs != 1 || r.terms.size() < 2) return false;
    return std::all_of(r.terms.begin(), r.terms.end(), [&](const auto& t) {
      const auto i = static_cast<std::size_t>(t.first);
      return t.second == 1 && root.lower[i] >= 0 && root.upper[i] <= 1;
    });
  }

  // True iff the row's variables form exactly one recorded group.
  bool defines(const Row& r) const {
    const int g = group_of_[static_cast<std::size_t>(r.terms.front().first)];
    return groups_[static_cast<std::size_t>(g)].size() == r.terms.size() &&
           std::all_of(r.terms.begin(), r.terms.end(),
                       [&](const auto& t) { return group_of_[static_cast<std::size_t>(t.first)] == g; });
  }

  void add(const std::vector<std::pair<int, Integer>>& terms, const Integer& rhs, bool own_group_row) {
    PRow row;
    row.rhs = rhs;
    for (const auto& [v, c] : terms) {
      const int g = own_group_row ? -1 : group_of_[static_cast<std::size_t>(v)];
      if (g < 0) {
        row.plain.emplace_back(v, c);
        continue;
      }
      auto part = std::find_if(row.parts.begin(), row.parts.end(), [&](const GroupPart& p) { return p.group == g; });
      if (part == row.parts.end()) {
        row.parts.push_back({g, std::vector<Integer>(groups_[static_cast<std::size_t>(g)].size(), Integer(0))});
        part = std::prev(row.parts.end());
      }
      const auto& members = groups_[static_cast<std::size_t>(g)];
      part->coeffs[static_cast<std::size_t>(std::find(members.begin(), members.end(), v) - members.begin())] += c;
    }
    rows_.push_back(std::move(row));
  }

  struct PartState {
    Integer contribution;
    long forced = -1;  // member already fixed to 1
    long best = -1;    // index of the smallest available coefficient
    std::optional<Integer> second;
  };

  bool tighten(const PRow& row, Node& node, bool& changed) const {
    Integer min_activity = 0;
    for (const auto& [v, c] : row.plain) {
      const auto i = static_cast<std::size_t>(v);
      min_activity += c * to_integer(sgn(c) > 0 ? node.lower[i] : node.upper[i]);
    }
    std::vector<PartState> states(row.parts.size());
    for (std::size_t p = 0; p < row.parts.size(); ++p) {
      const auto& members = groups_[static_cast<std::size_t>(row.parts[p].group)];
      const auto& coeffs = row.parts[p].coeffs;
      PartState& st = states[p];
      for (std::size_t k = 0; k < members.size(); ++k) {
        const auto i = static_cast<std::size_t>(members[k]);
        if (node.lower[i] >= 1) st.forced = static_cast<long>(k);
        if (node.upper[i] < 1) continue;
        if (st.best < 0 || coeffs[k] < coeffs[static_cast<std::size_t>(st.best)]) {
          if (st.best >= 0) st.second = coeffs[static_cast<std::size_t>(st.best)];
          st.best = static_cast<long>(k);
        } else if (!st.second || coeffs[k] < *st.second) {
          st.second = coeffs[k];
        }
      }
      if (st.best < 0) return false;  // every member is fixed to 0
      st.contribution = coeffs[static_cast<std::size_t>(st.forced >= 0 ? st.forced : st.best)];
      min_activity += st.contribution;
    }
    if (min_activity > row.rhs) return false;

    Integer residual;
    Integer bound;
    for (const auto& [v, c] : row.plain) {
      const auto i = static_cast<std::size_t>(v);
      // c * x_i <= rhs - (min_activity - c * contribution_i)
      if (sgn(c) > 0) {
        residual = row.rhs - min_activity + c * to_integer(node.lower[i]);
        mpz_fdiv_q(bound.get_mpz_t(), residual.get_mpz_t(), c.get_mpz_t());
        if (bound < to_integer(node.upper[i])) {
          node.upper[i] = to_int64(bound);
          changed = true;
        }
      } else {
        residual = row.rhs - min_activity + c * to_integer(node.upper[i]);
        mpz_cdiv_q(bound.get_mpz_t(), residual.get_mpz_t(), c.get_mpz_t());
        if (bound > to_integer(node.lower[i])) {
          node.lower[i] = to_int64(bound);
          changed = true;
        }
      }
      if (node.lower[i] > node.upper[i]) return false;
    }

    for (std::size_t p = 0; p < row.parts.size(); ++p) {
      const PartState& st = states[p];
      if (st.forced >= 0) continue;  // the group row zeroes the others
      const auto& members = groups_[static_cast<std::size_t>(row.parts[p].group)];
      const auto& coeffs = row.parts[p].coeffs;
      const Integer rest = min_activity - st.contribution;
      for (std::size_t k = 0; k < members.size(); ++k) {
        const auto i = static_cast<std::size_t>(members[k]);
        if (node.upper[i] < 1) continue;
        if (rest + coeffs[k] > row.rhs) {
          node.upper[i] = 0;
          changed = true;
          continue;
        }
        const bool is_best = static_cast<long>(k) == st.best;
        if (is_best && st.second && rest + *st.second > row.rhs && node.lower[i] < 1) {
          node.lower[i] = 1;
          changed = true;
        }
      }
    }
    return true;
  }

  std::vector<int> group_of_;
  std::vector<std::vector<int>> groups_;
  std::vector<PRow> rows_;
};

// Smallest sum of squared distances the box still allows.
bool quadratic_possible(const QuadraticConstraint& q, const Node& node) {
  Integer total = 0;
  for (const auto& s : q.squares) {
    auto i = static_cast<std::size_t>(s.var.value);
    int64_t gap = 0;
    if (s.center < node.lower[i]) gap = node.lower[i] - s.center;
    if (s.center > node.upper[i]) gap = s.center - node.upper[i];
    Integer g = to_integer(gap);
    total += g * g;
  }
  return total <= q.bound;
}

bool quadratic_holds(const QuadraticConstraint& q, const Assignment& x) {
  Integer total = 0;
  for (const auto& s : q.squares) {
    Integer d = to_integer(x[static_cast<std::size_t>(s.var.value)] - s.center);
    total += d * d;
  }
  return total <= q.bound;
}

}  // namespace

SolveResult solve(const IlpModel& input, const SolveOptions& options) {
  const auto start = Clock::now();
  const IlpModel model = input.is_normalized() ? input : normalize(input);
  const std::size_t n = model.num_variables();

  std::vector<Row> rows;
  for (const auto& c : model.constraints()) {
    Row r;
    r.rhs = c.rhs.get_num();
    r.equality = c.relation == Relation::kEqual;
    for (const auto& t : c.terms) r.terms.emplace_back(t.var.value, t.coeff.get_num());
    rows.push_back(std::move(r));
  }

  SolveResult result;
  auto finish = [&](SolveStatus status) {
    result.status = status;
    result.stats.seconds = seconds_since(start);
    return result;
  };

  Node root;
  for (const auto& v : model.variables()) {
    root.lower.push_back(v.lower);
    root.upper.push_back(v.upper);
  }

  const Propagator propagator(rows, root);
  BoundedSimplex simplex(n, rows);
  std::vector<Node> stack{std::move(root)};

  while (!stack.empty()) {
    if (expired(options.deadline)) return finish(SolveStatus::kTimeout);
    if (options.node_limit != 0 && result.stats.nodes >= options.node_limit) return finish(SolveStatus::kTimeout);

    Node node = std::move(stack.back());
    stack.pop_back();
    ++result.stats.nodes;

    if (options.propagate && !propagator.run(node, 8)) continue;
    if (!std::all_of(model.quadratics().begin(), model.quadratics().end(),
                     [&](const QuadraticConstraint& q) { return quadratic_possible(q, node); })) {
      continue;
    }

    simplex.set_bounds(node.lower, node.upper);
    auto outcome = simplex.check(options.deadline);
    result.stats.pivots = simplex.pivots();
    if (outcome == BoundedSimplex::Outcome::kInterrupted) return finish(SolveStatus::kTimeout);
    if (outcome == BoundedSimplex::Outcome::kInfeasible) continue;

    // Most fractional variable, lowest id on ties.
    std::size_t branch = n;
    Rational best_distance = 0;
    Integer branch_floor;
    for (std::size_t j = 0; j < n; ++j) {
      const Rational& v = simplex.value(j);
      if (v.get_den() == 1) continue;
      Integer fl = floor_of(v);
      Rational frac = v - Rational(fl);
      Rational distance = std::min(frac, Rational(1 - frac));
      if (branch == n || distance > best_distance) {
        branch = j;
        best_distance = distance;
        branch_floor = fl;
      }
    }

    if (branch != n) {
      const int64_t fl = to_int64(branch_floor);
      const bool up_first = simplex.value(branch) - Rational(branch_floor) >= Rational(1, 2);
      Node down = node;
      down.upper[branch] = fl;
      Node up = std::move(node);
      up.lower[branch] = fl + 1;
      if (up_first) {
        stack.push_back(std::move(down));
        stack.push_back(std::move(up));
      } else {
        stack.push_back(std::move(up));
        stack.push_back(std::move(down));
      }
      continue;
    }

    Assignment point(n);
    for (std::size_t j = 0; j < n; ++j) point[j] = to_int64(simplex.value(j).get_num());

    const QuadraticConstraint* violated = nullptr;
    for (const auto& q : model.quadratics()) {
      if (!quadratic_holds(q, point)) {
        violated = &q;
        break;
      }
    }
    if (violated == nullptr) {
      if (!check_assignment(input, point)) {
        throw std::logic_error("branch-and-bound produced an assignment that violates the model");
      }
      result.assignment = std::move(point);
      return finish(SolveStatus::kFeasible);
    }

    // Split the coordinate with the largest deviation into below / at / above
    // its current value; the middle child is explored last.
    std::size_t split = n;
    int64_t worst = -1;
    for (const auto& s : violated->squares) {
      auto i = static_cast<std::size_t>(s.var.value);
      if (node.lower[i] == node.upper[i]) continue;
      int64_t dev = std::llabs(point[i] - s.center);
      if (dev > worst) {
        worst = dev;
        split = i;
      }
    }
    if (split == n) continue;  // all coordinates fixed and still violated
    const int64_t at = point[split];
    Node middle = node;
    middle.lower[split] = at;
    middle.upper[split] = at;
    stack.push_back(std::move(middle));
    if (at < node.upper[split]) {
      Node above = node;
      above.lower[split] = at + 1;
      stack.push_back(std::move(above));
    }
    if (at > node.lower[split]) {
      Node below = node;
      below.upper[split] = at - 1;
      stack.push_back(std::move(below));
    }
  }
  return finish(SolveStatus::kInfeasible);
}

}  // namespace qnnv::ilp
