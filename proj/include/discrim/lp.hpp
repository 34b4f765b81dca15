#ifndef DISCRIM_LP_HPP
#define DISCRIM_LP_HPP

#include <Eigen/Core>

#include "discrim/core.hpp"

namespace discrim
{

//! @brief phi(i, j) = phi(x_i, theta_j) for N candidate points and M parameter vectors
struct WeightLpInstance
{
  Eigen::MatrixXd phi;
};

enum class LpStatus
{
  optimal,
  infeasible_numerics
};

enum class LpMethod
{
  interior_point,  //!< primal-dual path following (central point of a degenerate optimal face); simplex if it stalls
  simplex          //!< dense tableau simplex; returns a vertex
};

struct WeightLpSolution
{
  Vector weights;
  double t = 0.;
  LpStatus status = LpStatus::optimal;
  int iterations = 0;
};

//! rows closer than this (relative to the largest entry) are treated as one experiment
constexpr double duplicate_row_tol = 1e-12;

//! @brief max t  s.t.  phi(:, j)' w >= t for all j,  w on the probability simplex
////////////////////////////////////////////////////////////////////////
//! Identical columns are removed, rows that agree to duplicate_row_tol
//! are merged into their first occurrence (the others get weight 0), and
//! phi is rescaled to unit maximum before solving. On output, weights in [-1e-12, 0) are clamped to 0,
//! the vector is renormalised, and t is recomputed as min_j phi(:, j)' w.
////////////////////////////////////////////////////////////////////////
WeightLpSolution solve_weight_lp( WeightLpInstance const& instance, LpMethod method = LpMethod::interior_point );

} // namespace discrim

#endif
