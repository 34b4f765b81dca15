#ifndef DISCRIM_LSQ_HPP
#define DISCRIM_LSQ_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "discrim/core.hpp"

namespace discrim
{

//! @brief Largest dimension covered by the bundled direction numbers
constexpr std::size_t sobol_max_dim = 21;

//! @brief Unscrambled Sobol points 1..n (the origin is skipped) mapped into box
std::vector<Vector> sobol_points( std::size_t dim, std::size_t n, ParameterSpace const& box );

struct FitConfig
{
  int n_starts = 9;            //!< starts beyond the warm start
  double lambda = 1e-8;        //!< uniform extra weight on every design point
  double local_tol = 1e-10;    //!< step and projected-gradient tolerance
  int max_local_iters = 200;
};

struct FitResult
{
  Vector theta_hat;
  double objective = 0.;              //!< T(xi, theta_hat)
  double regularized_objective = 0.;  //!< T(xi, theta_hat) + lambda sum_i phi(x_i, theta_hat)
  int start_index = -1;               //!< 0 is the warm start when one is given
  std::vector<std::string> skipped;   //!< starts abandoned on evaluation errors
};

//! @brief All starts failed; carries the best iterate seen
class FitError : public std::runtime_error
{
public:
  FitError( std::string const& what, Vector best ) : std::runtime_error( what ), best_( std::move( best ) ) {}
  Vector const& best_iterate() const { return best_; }

private:
  Vector best_;
};

//! @brief Weighted, optionally regularised, bound-constrained least squares with multistart
FitResult fit_parameters( ModelPair const& pair, Design const& design, std::optional<Vector> const& warm_start,
                          FitConfig const& cfg = {} );

namespace detail
{

//! r(theta) written into the residual span (length fixed per problem)
using ResidualFn = std::function<void( std::span<double const> theta, std::span<double> r )>;

struct BoundedLsqResult
{
  Vector x;
  double cost = 0.;  //!< 0.5 ||r||^2
  int iterations = 0;
  bool converged = false;
};

//! @brief Projected Levenberg-Marquardt trust-region method on a box
BoundedLsqResult solve_bounded_lsq( ResidualFn const& residual, std::size_t n_residuals, Vector x0,
                                    ParameterSpace const& box, double tol, int max_iters );

} // namespace detail

} // namespace discrim

#endif
