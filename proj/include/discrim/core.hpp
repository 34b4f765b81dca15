#ifndef DISCRIM_CORE_HPP
#define DISCRIM_CORE_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace discrim
{

using Vector = std::vector<double>;

//! @brief Thrown when an argument violates a documented precondition or invariant
class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//! @brief Model evaluation failure at a specific (x, theta) pair
class EvaluationError : public std::runtime_error
{
public:
  EvaluationError( std::string const& what, Vector x, Vector theta );

  Vector const& point() const { return x_; }
  Vector const& theta() const { return theta_; }

private:
  Vector x_;
  Vector theta_;
};

//! @brief A single experiment: one coordinate per design-space dimension
struct DesignPoint
{
  Vector coords;

  DesignPoint() = default;
  DesignPoint( Vector c ) : coords( std::move( c ) ) {}
  DesignPoint( std::initializer_list<double> c ) : coords( c ) {}

  std::size_t dim() const { return coords.size(); }
  double operator[]( std::size_t i ) const { return coords[i]; }

  friend bool operator==( DesignPoint const&, DesignPoint const& ) = default;
  friend auto operator<=>( DesignPoint const& a, DesignPoint const& b ) { return a.coords <=> b.coords; }
};

//! @brief Coordinates rounded to 12 significant digits; equal keys mean the same experiment
Vector canonical_key( DesignPoint const& x );
bool same_point( DesignPoint const& a, DesignPoint const& b );

//! @brief Discrete probability measure over design points
////////////////////////////////////////////////////////////////////////
//! Weights are nonnegative and sum to one (absolute tolerance 1e-12).
//! Points that coincide after canonical rounding are merged on
//! construction by summing their weights; the first occurrence keeps
//! its position in the support.
////////////////////////////////////////////////////////////////////////
class Design
{
public:
  static constexpr double weight_sum_tol = 1e-12;

  Design() = default;
  Design( std::vector<DesignPoint> points, Vector weights );

  static Design point_mass( DesignPoint x );
  //! @brief Equal weights on every point
  static Design uniform( std::vector<DesignPoint> points );

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  std::size_t dim() const { return points_.empty() ? 0 : points_.front().dim(); }

  std::vector<DesignPoint> const& points() const { return points_; }
  Vector const& weights() const { return weights_; }
  DesignPoint const& point( std::size_t i ) const { return points_[i]; }
  double weight( std::size_t i ) const { return weights_[i]; }

  //! @brief Number of points carrying strictly positive weight
  std::size_t support_size() const;

private:
  std::vector<DesignPoint> points_;
  Vector weights_;
};

struct BoxSpace
{
  Vector lower;
  Vector upper;
};

struct LatticeSpace
{
  //! per-dimension levels, strictly increasing
  std::vector<Vector> levels;
};

//! @brief Continuous box or finite lattice of candidate experiments
class DesignSpace
{
public:
  static DesignSpace box( Vector lower, Vector upper );
  static DesignSpace lattice( std::vector<Vector> levels );

  std::size_t dim() const;
  bool is_box() const { return std::holds_alternative<BoxSpace>( space_ ); }
  bool is_lattice() const { return std::holds_alternative<LatticeSpace>( space_ ); }
  BoxSpace const& as_box() const { return std::get<BoxSpace>( space_ ); }
  LatticeSpace const& as_lattice() const { return std::get<LatticeSpace>( space_ ); }

  //! @brief Membership test; lattice coordinates must match a level after canonical rounding
  bool contains( DesignPoint const& x ) const;

  //! @brief Number of lattice points (throws for a box)
  std::size_t lattice_size() const;
  //! @brief All lattice points in lexicographic order (throws for a box)
  std::vector<DesignPoint> enumerate() const;

private:
  explicit DesignSpace( std::variant<BoxSpace, LatticeSpace> s ) : space_( std::move( s ) ) {}
  std::variant<BoxSpace, LatticeSpace> space_;
};

//! @brief Box parameter space of the alternative model
struct ParameterSpace
{
  Vector lower;
  Vector upper;

  ParameterSpace() = default;
  ParameterSpace( Vector lo, Vector up );

  std::size_t dim() const { return lower.size(); }
  bool contains( std::span<double const> theta ) const;
  Vector clamp( std::span<double const> theta ) const;
};

//! x -> f1(x), written into out (length = response_dim)
using ReferenceModel = std::function<void( std::span<double const> x, std::span<double> out )>;
//! (x, theta) -> f2(x, theta), written into out (length = response_dim)
using AlternativeModel
  = std::function<void( std::span<double const> x, std::span<double const> theta, std::span<double> out )>;

//! @brief Reference model (assumed true) and parameterised alternative
struct ModelPair
{
  ReferenceModel reference;
  AlternativeModel alternative;
  ParameterSpace parameter_space;
  std::size_t response_dim = 1;
  std::string name;

  Vector eval_reference( DesignPoint const& x ) const;
  Vector eval_alternative( DesignPoint const& x, std::span<double const> theta ) const;
};

using ScalarReference = std::function<double( std::span<double const> x )>;
using ScalarAlternative = std::function<double( std::span<double const> x, std::span<double const> theta )>;

//! @brief Wraps single-response callables as a d_y = 1 model pair
ModelPair make_scalar_pair( ScalarReference f1, ScalarAlternative f2, ParameterSpace space, std::string name = {} );

//! @brief Squared Euclidean distance of two response vectors
double squared_norm_diff( std::span<double const> a, std::span<double const> b );

//! @brief phi(x, theta) = ||f1(x) - f2(x, theta)||^2
double squared_distance( ModelPair const& pair, DesignPoint const& x, std::span<double const> theta );

//! @brief T(xi, theta) = sum_i w_i phi(x_i, theta)
double t_value( ModelPair const& pair, Design const& design, std::span<double const> theta );

//! @brief psi(x, xi) = phi(x, theta_hat) - T(xi, theta_hat), theta_hat supplied by the caller
double directional_derivative( ModelPair const& pair, Design const& design, std::span<double const> theta_hat,
                               DesignPoint const& x );

//! @brief (1 - alpha) a + alpha b with merged supports
Design mix_designs( Design const& a, Design const& b, double alpha );

//! @brief Drops points with weight below threshold and renormalises
Design prune_design( Design const& design, double threshold = 1e-6 );

} // namespace discrim

#endif
