#include <doctest.h>

#include <random>

#include "qnnv/ilp.hpp"
#include "qnnv/solver.hpp"

using namespace qnnv;
using namespace qnnv::ilp;

namespace {

Rational q(const char* text) { return parse_rational(text); }
LinearExpr var(VarId v, Rational c = 1) { return LinearExpr::variable(v, c); }
LinearExpr num(Rational c) { return LinearExpr(c); }

// Calls f on every assignment in the variables' box.
template <typename F>
void for_each_point(const IlpModel& m, F&& f) {
  Assignment a;
  for (const auto& v : m.variables()) a.push_back(v.lower);
  for (;;) {
    f(a);
    std::size_t i = a.size();
    while (i > 0) {
      --i;
      if (a[i] < m.variables()[i].upper) {
        ++a[i];
        for (std::size_t j = i + 1; j < a.size(); ++j) a[j] = m.variables()[j].lower;
        break;
      }
      if (i == 0) return;
    }
    if (a.empty()) return;
  }
}

bool brute_feasible(const IlpModel& m) {
  bool found = false;
  for_each_point(m, [&](const Assignment& a) { found = found || check_assignment(m, a); });
  return found;
}

}  // namespace

TEST_CASE("expressions combine terms per variable") {
  IlpModel m;
  VarId x = m.add_integer(0, 5, "x");
  VarId y = m.add_boolean("y");
  LinearExpr e = var(x, 2) + var(y) - var(x) + num(3);
  CHECK(e.coefficients().size() == 2);
  CHECK(e.coefficients().at(x) == 1);
  CHECK(e.constant() == 3);
  e -= var(y);
  CHECK(e.coefficients().size() == 1);
  CHECK(m.expr_min(var(x, -2) + num(1)) == -9);
  CHECK(m.expr_max(var(x, -2) + num(1)) == 1);
  CHECK(m.dominating_m(var(x, -2) + num(1)) == 10);
}

TEST_CASE("model construction errors") {
  IlpModel m;
  CHECK_THROWS_AS(m.add_integer(3, 2, "x"), std::invalid_argument);
  VarId x = m.add_integer(0, 5, "x");
  CHECK_THROWS_AS(m.add_constraint(var(VarId{7}), Relation::kLessEqual, num(1)), std::invalid_argument);
  CHECK(m.variable(x).name == "x");
  CHECK(m.num_booleans() == 0);
}

TEST_CASE("normalize clears denominators and strictness") {
  IlpModel m;
  VarId x = m.add_integer(-20, 20, "x");
  m.add_constraint(var(x, Rational(1, 16)), Relation::kLess, num(q("0.5")));
  IlpModel n = normalize(m);
  REQUIRE(n.constraints().size() == 1);
  const auto& c = n.constraints()[0];
  CHECK(c.relation == Relation::kLessEqual);
  REQUIRE(c.terms.size() == 1);
  CHECK(c.terms[0].coeff == 1);
  CHECK(c.rhs == 7);
  CHECK(n.is_normalized());
  CHECK_FALSE(m.is_normalized());
}

TEST_CASE("normalize leaves integral equalities alone and negates >=") {
  IlpModel m;
  VarId x = m.add_integer(0, 9, "x");
  m.add_constraint(var(x), Relation::kEqual, num(3));
  m.add_constraint(var(x, 2), Relation::kGreaterEqual, num(1));
  IlpModel n = normalize(m);
  CHECK(n.constraints()[0].relation == Relation::kEqual);
  CHECK(n.constraints()[0].terms[0].coeff == 1);
  CHECK(n.constraints()[0].rhs == 3);
  CHECK(n.constraints()[1].relation == Relation::kLessEqual);
  CHECK(n.constraints()[1].terms[0].coeff == -2);
  CHECK(n.constraints()[1].rhs == -1);
}

TEST_CASE("normalize of the hidden-neuron upper row") {
  // (9a - 20b)/16 < 0.5 v1 + 1.5 v2 + ... + 7.5 v8 + M v9 is scaled by the
  // least common denominator 16.
  IlpModel m;
  m.set_big_m(1000);
  VarId a = m.add_integer(6, 14, "a");
  VarId b = m.add_integer(0, 6, "b");
  std::vector<VarId> v;
  for (int i = 1; i <= 9; ++i) v.push_back(m.add_boolean("v" + std::to_string(i)));
  LinearExpr lhs = var(a, Rational(9, 16)) + var(b, Rational(-20, 16));
  LinearExpr rhs;
  for (int i = 0; i < 8; ++i) rhs.add(v[static_cast<std::size_t>(i)], Rational(2 * i + 1, 2));
  rhs.add(v[8], 1000);
  m.add_constraint(lhs, Relation::kLess, rhs);
  IlpModel n = normalize(m);
  const auto& c = n.constraints()[0];
  CHECK(c.relation == Relation::kLessEqual);
  CHECK(c.rhs == -1);
  std::map<int, Rational> coeff;
  for (const auto& t : c.terms) coeff[t.var.value] = t.coeff;
  CHECK(coeff[a.value] == 9);
  CHECK(coeff[b.value] == -20);
  for (int i = 0; i < 8; ++i) CHECK(coeff[v[static_cast<std::size_t>(i)].value] == -(8 * (2 * i + 1)));
  CHECK(coeff[v[8].value] == -16000);
}

TEST_CASE("normalize preserves the integer solution set") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> coef(-6, 6);
  std::uniform_int_distribution<int> den(1, 8);
  std::uniform_int_distribution<int> rel(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    IlpModel m;
    std::vector<VarId> xs;
    for (int i = 0; i < 3; ++i) xs.push_back(m.add_integer(-2, 3, "x" + std::to_string(i)));
    for (int r = 0; r < 3; ++r) {
      LinearExpr lhs;
      for (VarId x : xs) lhs.add(x, Rational(coef(rng), den(rng)));
      m.add_constraint(lhs, static_cast<Relation>(rel(rng)), num(Rational(coef(rng), den(rng))));
    }
    IlpModel n = normalize(m);
    for_each_point(m, [&](const Assignment& a) { REQUIRE(check_assignment(m, a) == check_assignment(n, a)); });
  }
}

TEST_CASE("check_assignment") {
  IlpModel empty;
  CHECK(check_assignment(empty, {}));
  IlpModel m;
  VarId x = m.add_integer(0, 1, "x");
  m.add_constraint(var(x), Relation::kGreaterEqual, num(1));
  CHECK_FALSE(check_assignment(m, {0}));
  CHECK(check_assignment(m, {1}));
  CHECK_FALSE(check_assignment(m, {2}));
  CHECK_THROWS_AS(check_assignment(m, {}), std::invalid_argument);
  IlpModel strict;
  VarId y = strict.add_integer(0, 5, "y");
  strict.add_constraint(var(y), Relation::kLess, num(3));
  CHECK(check_assignment(strict, {2}));
  CHECK_FALSE(check_assignment(strict, {3}));
  IlpModel quad;
  VarId a = quad.add_integer(0, 9, "a");
  VarId b = quad.add_integer(0, 9, "b");
  quad.add_quadratic({{{a, 4}, {b, 4}}, 4});
  CHECK(check_assignment(quad, {6, 4}));
  CHECK_FALSE(check_assignment(quad, {6, 5}));
}

TEST_CASE("solver basics") {
  {
    IlpModel m;
    VarId x = m.add_integer(0, 5, "x");
    m.add_constraint(var(x), Relation::kGreaterEqual, num(3));
    m.add_constraint(var(x), Relation::kLessEqual, num(2));
    CHECK(solve(m).status == SolveStatus::kInfeasible);
  }
  {
    IlpModel m;
    VarId x = m.add_integer(0, 5, "x");
    m.add_constraint(var(x, 2), Relation::kEqual, num(4));
    SolveResult r = solve(m);
    REQUIRE(r.status == SolveStatus::kFeasible);
    CHECK((*r.assignment)[0] == 2);
  }
  {
    // 2x = 3 has a rational but no integer solution.
    IlpModel m;
    VarId x = m.add_integer(0, 5, "x");
    m.add_constraint(var(x, 2), Relation::kEqual, num(3));
    CHECK(solve(m, {no_deadline(), 0, false}).status == SolveStatus::kInfeasible);
  }
  {
    IlpModel m;
    CHECK(solve(m).status == SolveStatus::kFeasible);
  }
}

TEST_CASE("solver honours deadlines and node limits") {
  IlpModel m;
  VarId x = m.add_integer(0, 100, "x");
  VarId y = m.add_integer(0, 100, "y");
  m.add_constraint(var(x, 2) + var(y, 2), Relation::kEqual, num(101));
  CHECK(solve(m, {deadline_after(0), 0, true}).status == SolveStatus::kTimeout);
  CHECK(solve(m, {no_deadline(), 1, false}).status == SolveStatus::kTimeout);
  CHECK(solve(m).status == SolveStatus::kInfeasible);
}

TEST_CASE("solver handles lazy quadratic rows") {
  IlpModel m;
  VarId a = m.add_integer(0, 20, "a");
  VarId b = m.add_integer(0, 20, "b");
  m.add_quadratic({{{a, 10}, {b, 10}}, 25});
  // a + b >= 27 is reachable only at (13, 14) or (14, 13) within radius 5
  m.add_constraint(var(a) + var(b), Relation::kGreaterEqual, num(27));
  SolveResult r = solve(m);
  REQUIRE(r.status == SolveStatus::kFeasible);
  CHECK((*r.assignment)[0] + (*r.assignment)[1] == 27);
  m.add_constraint(var(a) + var(b), Relation::kGreaterEqual, num(28));
  CHECK(solve(m).status == SolveStatus::kInfeasible);
}

TEST_CASE("solver agrees with enumeration on random models") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> coef(-5, 5);
  std::uniform_int_distribution<int> den(1, 4);
  std::uniform_int_distribution<int> rel(0, 3);
  std::uniform_int_distribution<int> rows(1, 5);
  std::uniform_int_distribution<int> flip(0, 3);
  int feasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    IlpModel m;
    std::vector<VarId> xs;
    for (int i = 0; i < 4; ++i) {
      xs.push_back(i % 2 ? m.add_boolean("b" + std::to_string(i)) : m.add_integer(-3, 4, "x" + std::to_string(i)));
    }
    const int n_rows = rows(rng);
    for (int r = 0; r < n_rows; ++r) {
      LinearExpr lhs;
      for (VarId x : xs) lhs.add(x, Rational(coef(rng), den(rng)));
      m.add_constraint(lhs, static_cast<Relation>(rel(rng)), num(Rational(coef(rng), den(rng))));
    }
    if (flip(rng) == 0) m.add_quadratic({{{xs[0], 1}, {xs[2], 0}}, 5});
    const bool expected = brute_feasible(m);
    for (bool propagate : {true, false}) {
      SolveResult r = solve(m, {no_deadline(), 0, propagate});
      REQUIRE(r.status == (expected ? SolveStatus::kFeasible : SolveStatus::kInfeasible));
      if (expected) REQUIRE(check_assignment(m, *r.assignment));
    }
    feasible += expected;
  }
  // Both outcomes must be exercised.
  CHECK(feasible > 40);
  CHECK(feasible < 360);
}

TEST_CASE("solver agrees with enumeration on models with one-hot groups") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> coef(-6, 6);
  std::uniform_int_distribution<int> rel(0, 3);
  std::uniform_int_distribution<int> rows(1, 4);
  std::uniform_int_distribution<int> size(2, 4);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    IlpModel m;
    std::vector<VarId> all;
    // Two groups (the second sometimes overlapping the first) and one integer.
    std::vector<VarId> g1, g2;
    for (int i = size(rng); i > 0; --i) g1.push_back(m.add_boolean("a" + std::to_string(i)));
    for (int i = size(rng); i > 0; --i) g2.push_back(m.add_boolean("b" + std::to_string(i)));
    if (trial % 5 == 0) g2.push_back(g1.front());
    for (const auto* g : {&g1, &g2}) {
      LinearExpr sum;
      for (VarId v : *g) sum.add(v, 1);
      m.add_constraint(sum, Relation::kEqual, num(1));
    }
    all.insert(all.end(), g1.begin(), g1.end());
    all.insert(all.end(), g2.begin(), g2.end());
    all.push_back(m.add_integer(-4, 4, "x"));
    const int n_rows = rows(rng);
    for (int r = 0; r < n_rows; ++r) {
      LinearExpr lhs;
      for (VarId v : all) {
        if (coef(rng) % 2 == 0) lhs.add(v, Rational(coef(rng)));
      }
      m.add_constraint(lhs, static_cast<Relation>(rel(rng)), num(Rational(coef(rng))));
    }
    const bool expected = brute_feasible(m);
    for (bool propagate : {true, false}) {
      SolveResult r = solve(m, {no_deadline(), 0, propagate});
      REQUIRE(r.status == (expected ? SolveStatus::kFeasible : SolveStatus::kInfeasible));
      if (expected) REQUIRE(check_assignment(m, *r.assignment));
    }
    feasible += expected;
  }
  CHECK(feasible > 30);
  CHECK(feasible < 270);
}

TEST_CASE("LP export format") {
  IlpModel empty;
  CHECK(export_lp(empty) ==
        "\\ Feasibility model: 0 variables, 0 constraints\n"
        "Minimize\n obj: 0\nSubject To\nBounds\nGenerals\nBinaries\nEnd\n");

  IlpModel m;
  VarId x = m.add_boolean("x");
  VarId y = m.add_boolean("y");
  m.add_constraint(var(x) + var(y), Relation::kLessEqual, num(1), "pick");
  CHECK(export_lp(m) ==
        "\\ Feasibility model: 2 variables, 1 constraints\n"
        "Minimize\n obj: 0\nSubject To\n pick: x + y <= 1\nBounds\nGenerals\nBinaries\n x\n y\nEnd\n");
}

TEST_CASE("LP export of integers, fixed bounds, strict rows and quadratics") {
  IlpModel m;
  VarId a = m.add_integer(-3, 7, "a");
  VarId b = m.add_integer(2, 2, "b");
  m.add_constraint(var(a, -2) + var(b, 3), Relation::kGreaterEqual, num(-4));
  m.add_constraint(var(a, Rational(1, 2)), Relation::kLess, num(1));
  m.add_quadratic({{{a, 1}}, 9});
  const std::string text = export_lp(m);
  CHECK(text.find(" c0: -2 a + 3 b >= -4\n") != std::string::npos);
  CHECK(text.find(" c1: 0.5 a <= 0.9990234375\n") != std::string::npos);
  CHECK(text.find(" -3 <= a <= 7\n") != std::string::npos);
  CHECK(text.find(" b = 2\n") != std::string::npos);
  CHECK(text.find("Generals\n a\n b\n") != std::string::npos);
  CHECK(text.find("[") != std::string::npos);
  CHECK(export_lp(m) == text);
}
