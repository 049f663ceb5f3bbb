#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qnnv/rational.hpp"

namespace qnnv::ilp {

// Index of a variable inside one IlpModel.
struct VarId {
  int32_t value = -1;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

enum class VarKind { kBoolean, kInteger };

struct Variable {
  VarId id;
  VarKind kind = VarKind::kInteger;
  int64_t lower = 0;
  int64_t upper = 0;
  std::string name;
};

enum class Relation { kLessEqual, kLess, kEqual, kGreaterEqual };

struct Term {
  Rational coeff;
  VarId var;
};

// sum(terms) <relation> rhs, at most one term per variable.
struct LinearConstraint {
  std::vector<Term> terms;
  Relation relation = Relation::kLessEqual;
  Rational rhs;
  std::string name;
};

// sum_i (x_i - center_i)^2 <= bound. Enforced lazily by the solver.
struct QuadraticConstraint {
  struct Square {
    VarId var;
    int64_t center = 0;
  };
  std::vector<Square> squares;
  Integer bound;
};

// Affine expression builder: coefficients are combined per variable.
class LinearExpr {
 public:
  LinearExpr() = default;
  explicit LinearExpr(const Rational& constant) : constant_(constant) { constant_.canonicalize(); }
  static LinearExpr variable(VarId v, const Rational& coeff = 1);

  LinearExpr& add(VarId v, const Rational& coeff);
  LinearExpr& add_constant(const Rational& c);
  LinearExpr& operator+=(const LinearExpr& other);
  LinearExpr& operator-=(const LinearExpr& other);
  LinearExpr& operator*=(const Rational& factor);

  const std::map<VarId, Rational>& coefficients() const { return coeffs_; }
  const Rational& constant() const { return constant_; }

 private:
  std::map<VarId, Rational> coeffs_;
  Rational constant_ = 0;
};

LinearExpr operator+(LinearExpr a, const LinearExpr& b);
LinearExpr operator-(LinearExpr a, const LinearExpr& b);
LinearExpr operator*(LinearExpr a, const Rational& f);

using Assignment = std::vector<int64_t>;  // indexed by VarId::value

// A pure-feasibility integer linear program over bounded variables.
class IlpModel {
 public:
  VarId add_boolean(std::string name);
  // Throws std::invalid_argument if lower > upper.
  VarId add_integer(int64_t lower, int64_t upper, std::string name);
  void set_bounds(VarId v, int64_t lower, int64_t upper);

  // Adds lhs <relation> rhs; the expression's constant moves to the right.
  // Throws std::invalid_argument on unknown variables.
  void add_constraint(const LinearExpr& lhs, Relation relation, const LinearExpr& rhs, std::string name = {});
  void add_constraint(LinearConstraint constraint);
  void add_quadratic(QuadraticConstraint constraint);

  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(VarId v) const { return variables_.at(static_cast<std::size_t>(v.value)); }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  const std::vector<QuadraticConstraint>& quadratics() const { return quadratics_; }
  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_booleans() const;

  // Model-wide fallback magnitude for big-M rows.
  const Integer& big_m() const { return big_m_; }
  void set_big_m(Integer m) { big_m_ = std::move(m); }

  // Range of an expression under the current variable bounds.
  Rational expr_min(const LinearExpr& e) const;
  Rational expr_max(const LinearExpr& e) const;
  // 1 + ceil(max |e|): strictly dominates anything the expression can reach.
  Integer dominating_m(const LinearExpr& e) const;

  bool is_normalized() const;

 private:
  void check_var(VarId v) const;

  std::vector<Variable> variables_;
  std::vector<LinearConstraint> constraints_;
  std::vector<QuadraticConstraint> quadratics_;
  Integer big_m_ = 1000000;
};

// Integer coefficients only, relations restricted to <= and =. Strict rows
// become `<= rhs - 1` once the denominators are cleared, which is exact on
// integer assignments.
IlpModel normalize(const IlpModel& model);

// Exact check of bounds, linear rows (strict rows evaluated strictly) and
// quadratic rows. Throws std::invalid_argument if the assignment is short.
bool check_assignment(const IlpModel& model, const Assignment& assignment);

struct LpExportOptions {
  // Used only when the model still contains strict rows: `< rhs` is written
  // as `<= rhs - epsilon`.
  Rational epsilon = Rational(1, 1024);
};

// CPLEX-style LP text: Minimize 0, Subject To, Bounds, Generals, Binaries.
std::string export_lp(const IlpModel& model, const LpExportOptions& options = {});

}  // namespace qnnv::ilp
