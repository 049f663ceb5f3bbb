#pragma once

#include <cstdint>
#include <vector>

#include "qnnv/deadline.hpp"
#include "qnnv/rational.hpp"

namespace qnnv::ilp::detail {

// Row of a normalized model: sum(coeffs * x) <= rhs, or == rhs.
struct Row {
  std::vector<std::pair<int, Integer>> terms;
  Integer rhs;
  bool equality = false;
};

// Exact feasibility check for { rows, lo <= x <= hi } over the rationals.
//
// Every row gets a slack s_r = sum(a_rj x_j) bounded by its right-hand side,
// and the tableau expresses basic variables in terms of non-basic ones. A
// check repairs the smallest-index basic variable that violates a bound by
// pivoting with the smallest-index non-basic variable that has slack in the
// needed direction (Bland's rule, so it terminates). When no such variable
// exists the row itself is a certificate of infeasibility.
//
// Bounds of structural variables may be changed between checks; the tableau
// stays valid and only non-basic values are moved back into range. This makes
// depth-first branch-and-bound incremental.
class BoundedSimplex {
 public:
  BoundedSimplex(std::size_t num_structural, const std::vector<Row>& rows);

  enum class Outcome { kFeasible, kInfeasible, kInterrupted };

  void set_bounds(const std::vector<int64_t>& lower, const std::vector<int64_t>& upper);
  Outcome check(Deadline deadline);

  const Rational& value(std::size_t structural) const { return value_[structural]; }
  uint64_t pivots() const { return pivots_; }

 private:
  struct Bound {
    bool finite = false;
    Rational value;
  };

  bool below_lower(std::size_t var) const { return lower_[var].finite && value_[var] < lower_[var].value; }
  bool above_upper(std::size_t var) const { return upper_[var].finite && value_[var] > upper_[var].value; }
  void update_nonbasic(std::size_t var, const Rational& v);
  void pivot_and_update(std::size_t row, std::size_t entering, const Rational& target);
  void pivot(std::size_t row, std::size_t entering);

  std::size_t num_structural_;
  std::size_t num_vars_;
  std::vector<Bound> lower_;
  std::vector<Bound> upper_;
  std::vector<Rational> value_;
  std::vector<std::size_t> basic_of_row_;
  std::vector<long> row_of_var_;  // -1 when non-basic
  // tableau_[r][j]: coefficient of non-basic j in the definition of the basic
  // variable of row r.
  std::vector<std::vector<Rational>> tableau_;
  uint64_t pivots_ = 0;
};

}  // namespace qnnv::ilp::detail
