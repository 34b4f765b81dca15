#ifndef DISCRIM_GLOBAL_SEARCH_HPP
#define DISCRIM_GLOBAL_SEARCH_HPP

#include <functional>
#include <span>

#include "discrim/core.hpp"

namespace discrim
{

//! values within this relative distance count as ties
constexpr double tie_rel_tol = 1e-12;

struct GlobalSearchConfig
{
  int grid_per_dim = 64;
  int refine_top = 5;
  double local_tol = 1e-10;
};

struct DistanceMaximum
{
  DesignPoint point;
  double value = 0.;  //!< squared_distance at point
};

//! @brief argmax_x phi(x, theta_hat) over a box or a lattice
////////////////////////////////////////////////////////////////////////
//! Lattice: full enumeration. Box: tensor grid with grid_per_dim points
//! per dimension, then bounded quasi-Newton ascent from the refine_top
//! best grid points. Ties (up to tie_rel_tol) are broken towards the lexicographically
//! smallest point. Points whose evaluation fails are skipped.
////////////////////////////////////////////////////////////////////////
DistanceMaximum maximize_distance( ModelPair const& pair, std::span<double const> theta_hat, DesignSpace const& space,
                                   GlobalSearchConfig const& cfg = {} );

//! @brief Tensor grid used by the box search, lexicographic order
std::vector<DesignPoint> box_grid( BoxSpace const& box, int per_dim );

namespace detail
{

struct LocalMaxResult
{
  Vector x;
  double value = 0.;
  int iterations = 0;
};

//! @brief Projected BFGS ascent of f on [lower, upper] with central-difference gradients
LocalMaxResult maximize_bounded( std::function<double( std::span<double const> )> const& f, Vector x0,
                                 Vector const& lower, Vector const& upper, double tol, double initial_step,
                                 int max_iters = 200 );

} // namespace detail

} // namespace discrim

#endif
