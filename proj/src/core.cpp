#include "discrim/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace discrim
{

EvaluationError::EvaluationError( std::string const& what, Vector x, Vector theta )
  : std::runtime_error( fmt::format( "{} (x = [{}], theta = [{}])", what, fmt::join( x, ", " ),
                                     fmt::join( theta, ", " ) ) ),
    x_( std::move( x ) ), theta_( std::move( theta ) )
{}

namespace
{

double round_significant( double v )
{
  if( v == 0. || !std::isfinite( v ) ) return v == 0. ? 0. : v;
  char buf[32];
  std::snprintf( buf, sizeof buf, "%.11e", v );
  return std::strtod( buf, nullptr );
}

} // namespace

Vector canonical_key( DesignPoint const& x )
{
  Vector key( x.coords.size() );
  std::transform( x.coords.begin(), x.coords.end(), key.begin(), round_significant );
  return key;
}

bool same_point( DesignPoint const& a, DesignPoint const& b )
{
  return a.dim() == b.dim() && canonical_key( a ) == canonical_key( b );
}

////////////////////////////////////////////////////////////////////////
// Design
////////////////////////////////////////////////////////////////////////

Design::Design( std::vector<DesignPoint> points, Vector weights )
{
  if( points.size() != weights.size() )
    throw InvalidArgument( fmt::format( "design has {} points but {} weights", points.size(), weights.size() ) );
  if( points.empty() ) throw InvalidArgument( "design must contain at least one point" );

  std::size_t const d = points.front().dim();
  double sum = 0.;
  for( std::size_t i = 0; i < points.size(); ++i ){
    if( points[i].dim() != d )
      throw InvalidArgument( fmt::format( "design point {} has dimension {}, expected {}", i, points[i].dim(), d ) );
    for( double c : points[i].coords )
      if( !std::isfinite( c ) ) throw InvalidArgument( fmt::format( "design point {} has a non-finite coordinate", i ) );
    if( !( weights[i] >= 0. ) || !std::isfinite( weights[i] ) )
      throw InvalidArgument( fmt::format( "design weight {} is negative or not finite: {}", i, weights[i] ) );
    sum += weights[i];
  }
  if( std::abs( sum - 1. ) > weight_sum_tol )
    throw InvalidArgument( fmt::format( "design weights sum to {:.15g}, expected 1", sum ) );

  std::vector<Vector> keys;
  for( std::size_t i = 0; i < points.size(); ++i ){
    auto key = canonical_key( points[i] );
    auto it = std::find( keys.begin(), keys.end(), key );
    if( it != keys.end() ){
      weights_[static_cast<std::size_t>( it - keys.begin() )] += weights[i];
      continue;
    }
    keys.push_back( std::move( key ) );
    points_.push_back( std::move( points[i] ) );
    weights_.push_back( weights[i] );
  }
}

Design Design::point_mass( DesignPoint x ) { return Design( { std::move( x ) }, { 1. } ); }

Design Design::uniform( std::vector<DesignPoint> points )
{
  Vector w( points.size(), points.empty() ? 0. : 1. / static_cast<double>( points.size() ) );
  // exact sum for sizes where 1/n is not representable
  if( !w.empty() ) w.back() = 1. - std::accumulate( w.begin(), w.end() - 1, 0. );
  return Design( std::move( points ), std::move( w ) );
}

std::size_t Design::support_size() const
{
  return static_cast<std::size_t>( std::count_if( weights_.begin(), weights_.end(), []( double w ){ return w > 0.; } ) );
}

////////////////////////////////////////////////////////////////////////
// DesignSpace
////////////////////////////////////////////////////////////////////////

DesignSpace DesignSpace::box( Vector lower, Vector upper )
{
  if( lower.size() != upper.size() || lower.empty() )
    throw InvalidArgument( "box bounds must be nonempty and of equal length" );
  for( std::size_t i = 0; i < lower.size(); ++i )
    if( !std::isfinite( lower[i] ) || !std::isfinite( upper[i] ) || lower[i] > upper[i] )
      throw InvalidArgument( fmt::format( "box bound {} invalid: [{}, {}]", i, lower[i], upper[i] ) );
  return DesignSpace( BoxSpace{ std::move( lower ), std::move( upper ) } );
}

DesignSpace DesignSpace::lattice( std::vector<Vector> levels )
{
  if( levels.empty() ) throw InvalidArgument( "lattice must have at least one dimension" );
  for( std::size_t i = 0; i < levels.size(); ++i ){
    if( levels[i].empty() ) throw InvalidArgument( fmt::format( "lattice dimension {} has no levels", i ) );
    for( std::size_t k = 0; k < levels[i].size(); ++k ){
      if( !std::isfinite( levels[i][k] ) )
        throw InvalidArgument( fmt::format( "lattice dimension {} has a non-finite level", i ) );
      if( k > 0 && !( levels[i][k] > levels[i][k - 1] ) )
        throw InvalidArgument( fmt::format( "lattice dimension {} levels must be strictly increasing", i ) );
    }
  }
  return DesignSpace( LatticeSpace{ std::move( levels ) } );
}

std::size_t DesignSpace::dim() const
{
  return is_box() ? as_box().lower.size() : as_lattice().levels.size();
}

bool DesignSpace::contains( DesignPoint const& x ) const
{
  if( x.dim() != dim() ) return false;
  if( is_box() ){
    auto const& b = as_box();
    for( std::size_t i = 0; i < x.dim(); ++i )
      if( !( x[i] >= b.lower[i] && x[i] <= b.upper[i] ) ) return false;
    return true;
  }
  auto const key = canonical_key( x );
  auto const& levels = as_lattice().levels;
  for( std::size_t i = 0; i < key.size(); ++i ){
    bool hit = false;
    for( double l : levels[i] ) hit = hit || round_significant( l ) == key[i];
    if( !hit ) return false;
  }
  return true;
}

std::size_t DesignSpace::lattice_size() const
{
  if( !is_lattice() ) throw InvalidArgument( "design space is not a lattice" );
  std::size_t n = 1;
  for( auto const& l : as_lattice().levels ) n *= l.size();
  return n;
}

std::vector<DesignPoint> DesignSpace::enumerate() const
{
  std::size_t const n = lattice_size();
  auto const& levels = as_lattice().levels;
  std::vector<DesignPoint> out;
  out.reserve( n );
  std::vector<std::size_t> idx( levels.size(), 0 );
  for( std::size_t k = 0; k < n; ++k ){
    Vector c( levels.size() );
    for( std::size_t i = 0; i < levels.size(); ++i ) c[i] = levels[i][idx[i]];
    out.emplace_back( std::move( c ) );
    // odometer with the last dimension fastest keeps lexicographic order
    for( std::size_t i = levels.size(); i-- > 0; ){
      if( ++idx[i] < levels[i].size() ) break;
      idx[i] = 0;
    }
  }
  return out;
}

////////////////////////////////////////////////////////////////////////
// ParameterSpace
////////////////////////////////////////////////////////////////////////

ParameterSpace::ParameterSpace( Vector lo, Vector up ) : lower( std::move( lo ) ), upper( std::move( up ) )
{
  if( lower.size() != upper.size() || lower.empty() )
    throw InvalidArgument( "parameter bounds must be nonempty and of equal length" );
  for( std::size_t i = 0; i < lower.size(); ++i )
    if( !std::isfinite( lower[i] ) || !std::isfinite( upper[i] ) || lower[i] > upper[i] )
      throw InvalidArgument( fmt::format( "parameter bound {} invalid: [{}, {}]", i, lower[i], upper[i] ) );
}

bool ParameterSpace::contains( std::span<double const> theta ) const
{
  if( theta.size() != dim() ) return false;
  for( std::size_t i = 0; i < theta.size(); ++i )
    if( !( theta[i] >= lower[i] && theta[i] <= upper[i] ) ) return false;
  return true;
}

Vector ParameterSpace::clamp( std::span<double const> theta ) const
{
  Vector out( theta.begin(), theta.end() );
  for( std::size_t i = 0; i < out.size(); ++i ) out[i] = std::clamp( out[i], lower[i], upper[i] );
  return out;
}

////////////////////////////////////////////////////////////////////////
// ModelPair
////////////////////////////////////////////////////////////////////////

Vector ModelPair::eval_reference( DesignPoint const& x ) const
{
  Vector out( response_dim, 0. );
  reference( x.coords, out );
  for( double v : out )
    if( !std::isfinite( v ) ) throw EvaluationError( "reference model returned a non-finite value", x.coords, {} );
  return out;
}

Vector ModelPair::eval_alternative( DesignPoint const& x, std::span<double const> theta ) const
{
  Vector out( response_dim, 0. );
  alternative( x.coords, theta, out );
  for( double v : out )
    if( !std::isfinite( v ) )
      throw EvaluationError( "alternative model returned a non-finite value", x.coords,
                             Vector( theta.begin(), theta.end() ) );
  return out;
}

ModelPair make_scalar_pair( ScalarReference f1, ScalarAlternative f2, ParameterSpace space, std::string name )
{
  ModelPair pair;
  pair.reference = [f = std::move( f1 )]( std::span<double const> x, std::span<double> out ){ out[0] = f( x ); };
  pair.alternative = [f = std::move( f2 )]( std::span<double const> x, std::span<double const> th,
                                            std::span<double> out ){ out[0] = f( x, th ); };
  pair.parameter_space = std::move( space );
  pair.response_dim = 1;
  pair.name = std::move( name );
  return pair;
}

double squared_norm_diff( std::span<double const> a, std::span<double const> b )
{
  double s = 0.;
  for( std::size_t k = 0; k < a.size(); ++k ){
    double const r = a[k] - b[k];
    s += r * r;
  }
  return s;
}

double squared_distance( ModelPair const& pair, DesignPoint const& x, std::span<double const> theta )
{
  auto const y1 = pair.eval_reference( x );
  auto const y2 = pair.eval_alternative( x, theta );
  return squared_norm_diff( y1, y2 );
}

double t_value( ModelPair const& pair, Design const& design, std::span<double const> theta )
{
  double t = 0.;
  for( std::size_t i = 0; i < design.size(); ++i ){
    if( design.weight( i ) == 0. ) continue;
    t += design.weight( i ) * squared_distance( pair, design.point( i ), theta );
  }
  return t;
}

double directional_derivative( ModelPair const& pair, Design const& design, std::span<double const> theta_hat,
                               DesignPoint const& x )
{
  return squared_distance( pair, x, theta_hat ) - t_value( pair, design, theta_hat );
}

Design mix_designs( Design const& a, Design const& b, double alpha )
{
  if( !( alpha >= 0. && alpha <= 1. ) ) throw InvalidArgument( fmt::format( "mixing weight {} outside [0, 1]", alpha ) );
  if( a.dim() != b.dim() ) throw InvalidArgument( "cannot mix designs of different dimension" );

  std::vector<DesignPoint> pts;
  Vector w;
  pts.reserve( a.size() + b.size() );
  for( std::size_t i = 0; i < a.size(); ++i ){
    pts.push_back( a.point( i ) );
    w.push_back( ( 1. - alpha ) * a.weight( i ) );
  }
  for( std::size_t i = 0; i < b.size(); ++i ){
    pts.push_back( b.point( i ) );
    w.push_back( alpha * b.weight( i ) );
  }
  double const sum = std::accumulate( w.begin(), w.end(), 0. );
  for( double& v : w ) v /= sum;
  return Design( std::move( pts ), std::move( w ) );
}

Design prune_design( Design const& design, double threshold )
{
  if( !( threshold >= 0. && threshold < 1. ) ) throw InvalidArgument( "prune threshold must lie in [0, 1)" );
  if( design.empty() ) return design;

  std::vector<DesignPoint> pts;
  Vector w;
  for( std::size_t i = 0; i < design.size(); ++i ){
    if( design.weight( i ) < threshold || design.weight( i ) == 0. ) continue;
    pts.push_back( design.point( i ) );
    w.push_back( design.weight( i ) );
  }
  if( pts.empty() ){
    auto const best = std::max_element( design.weights().begin(), design.weights().end() ) - design.weights().begin();
    return Design::point_mass( design.point( static_cast<std::size_t>( best ) ) );
  }
  double const sum = std::accumulate( w.begin(), w.end(), 0. );
  for( double& v : w ) v /= sum;
  return Design( std::move( pts ), std::move( w ) );
}

} // namespace discrim
