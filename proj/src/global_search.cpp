#include "discrim/global_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "discrim/parallel.hpp"

namespace discrim
{

namespace
{

struct Candidate
{
  DesignPoint point;
  double value;
};

bool ties( double a, double b )
{
  return std::abs( a - b ) <= tie_rel_tol * std::max( std::abs( a ), std::abs( b ) );
}

// larger value first, then lexicographically smaller point
bool better( Candidate const& a, Candidate const& b )
{
  if( !ties( a.value, b.value ) ) return a.value > b.value;
  return a.point < b.point;
}

} // namespace

std::vector<DesignPoint> box_grid( BoxSpace const& box, int per_dim )
{
  if( per_dim < 2 ) throw InvalidArgument( "grid_per_dim must be at least 2" );
  std::size_t const d = box.lower.size();
  std::vector<Vector> axes( d );
  for( std::size_t i = 0; i < d; ++i ){
    if( box.lower[i] == box.upper[i] ){
      axes[i] = { box.lower[i] };
      continue;
    }
    for( int k = 0; k < per_dim; ++k ){
      double const u = static_cast<double>( k ) / ( per_dim - 1 );
      axes[i].push_back( k == per_dim - 1 ? box.upper[i] : box.lower[i] + u * ( box.upper[i] - box.lower[i] ) );
    }
  }
  return DesignSpace::lattice( axes ).enumerate();
}

namespace detail
{

LocalMaxResult maximize_bounded( std::function<double( std::span<double const> )> const& f, Vector x0,
                                 Vector const& lower, Vector const& upper, double tol, double initial_step,
                                 int max_iters )
{
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  auto const n = static_cast<Eigen::Index>( x0.size() );
  auto idx = []( Eigen::Index j ){ return static_cast<std::size_t>( j ); };

  auto clamp = [&]( VectorXd v ){
    for( Eigen::Index j = 0; j < n; ++j ) v[j] = std::clamp( v[j], lower[idx( j )], upper[idx( j )] );
    return v;
  };
  // minimise F = -f
  auto F = [&]( VectorXd const& v ){ return -f( std::span<double const>( v.data(), v.size() ) ); };
  auto grad = [&]( VectorXd const& v ){
    VectorXd g( n ), p = v;
    for( Eigen::Index j = 0; j < n; ++j ){
      double const h = 1e-7 * std::max( std::abs( v[j] ), 1. );
      double const hi = std::min( v[j] + h, upper[idx( j )] ), lo = std::max( v[j] - h, lower[idx( j )] );
      if( hi == lo ){
        g[j] = 0.;
        continue;
      }
      p[j] = hi;
      double const fh = F( p );
      p[j] = lo;
      double const fl = F( p );
      p[j] = v[j];
      g[j] = ( fh - fl ) / ( hi - lo );
    }
    return g;
  };

  VectorXd x = clamp( Eigen::Map<VectorXd>( x0.data(), n ) );
  double fx = F( x );
  VectorXd g = grad( x );
  MatrixXd H = MatrixXd::Identity( n, n );
  bool scaled = false;

  LocalMaxResult res;
  int it = 0;
  for( ; it < max_iters; ++it ){
    std::vector<bool> blocked( idx( n ) );
    double pg = 0.;
    for( Eigen::Index j = 0; j < n; ++j ){
      pg = std::max( pg, std::abs( std::clamp( x[j] - g[j], lower[idx( j )], upper[idx( j )] ) - x[j] ) );
      blocked[idx( j )] = ( x[j] <= lower[idx( j )] && g[j] > 0. ) || ( x[j] >= upper[idx( j )] && g[j] < 0. );
    }
    if( pg <= tol ) break;

    VectorXd gf = g;
    for( Eigen::Index j = 0; j < n; ++j )
      if( blocked[idx( j )] ) gf[j] = 0.;
    VectorXd p = -( H * gf );
    for( Eigen::Index j = 0; j < n; ++j )
      if( blocked[idx( j )] ) p[j] = 0.;
    if( p.dot( gf ) >= 0. ){
      p = -gf;
      H.setIdentity();
      scaled = false;
    }
    if( !scaled ){
      double const pn = p.cwiseAbs().maxCoeff();
      if( pn > 0. ) p *= initial_step / pn;
    }

    double alpha = 1., f_new = fx;
    VectorXd x_new = x;
    bool moved = false;
    for( int ls = 0; ls < 60; ++ls, alpha *= 0.5 ){
      x_new = clamp( x + alpha * p );
      f_new = F( x_new );
      if( f_new <= fx + 1e-4 * g.dot( x_new - x ) && f_new <= fx ){
        moved = true;
        break;
      }
    }
    if( !moved ) break;

    VectorXd const s = x_new - x;
    VectorXd const g_new = grad( x_new );
    VectorXd const yv = g_new - g;
    double const sy = s.dot( yv );
    x = x_new;
    bool const small_step = s.norm() <= tol * ( 1. + x.norm() );
    double const f_old = fx;
    fx = f_new;
    g = g_new;
    if( small_step || std::abs( f_old - fx ) <= 1e-16 * std::max( 1., std::abs( fx ) ) ) break;
    if( sy > 1e-300 ){
      if( !scaled ){
        H *= sy / yv.squaredNorm();
        scaled = true;
      }
      double const rho = 1. / sy;
      MatrixXd const I = MatrixXd::Identity( n, n );
      H = ( I - rho * s * yv.transpose() ) * H * ( I - rho * yv * s.transpose() ) + rho * s * s.transpose();
    }
  }
  res.x.assign( x.data(), x.data() + n );
  res.value = -fx;
  res.iterations = it;
  return res;
}

} // namespace detail

DistanceMaximum maximize_distance( ModelPair const& pair, std::span<double const> theta_hat, DesignSpace const& space,
                                   GlobalSearchConfig const& cfg )
{
  if( cfg.refine_top < 1 ) throw InvalidArgument( "refine_top must be at least 1" );
  if( !pair.parameter_space.contains( theta_hat ) ) throw InvalidArgument( "theta_hat outside the parameter space" );

  std::vector<DesignPoint> const candidates
    = space.is_lattice() ? space.enumerate() : box_grid( space.as_box(), cfg.grid_per_dim );

  std::vector<std::optional<double>> values( candidates.size() );
  parallel_for( candidates.size(), [&]( std::size_t k ){
    try{
      values[k] = squared_distance( pair, candidates[k], theta_hat );
    }
    catch( EvaluationError const& ){
    }
  } );

  std::vector<std::size_t> order;
  for( std::size_t k = 0; k < candidates.size(); ++k )
    if( values[k] ) order.push_back( k );
  if( order.empty() ) throw EvaluationError( "model evaluation failed at every search candidate", {}, Vector( theta_hat.begin(), theta_hat.end() ) );

  std::stable_sort( order.begin(), order.end(), [&]( std::size_t a, std::size_t b ){ return *values[a] > *values[b]; } );
  // enumeration order is lexicographic, so the smallest index among the ties wins
  std::size_t win = order.front();
  for( auto k : order ){
    if( !ties( *values[k], *values[order.front()] ) ) break;
    win = std::min( win, k );
  }
  Candidate best{ candidates[win], *values[win] };
  if( space.is_lattice() ) return { best.point, best.value };

  auto const& box = space.as_box();
  double step = 0.;
  for( std::size_t i = 0; i < box.lower.size(); ++i )
    step = std::max( step, ( box.upper[i] - box.lower[i] ) / ( cfg.grid_per_dim - 1 ) );

  std::size_t const n_refine = std::min<std::size_t>( static_cast<std::size_t>( cfg.refine_top ), order.size() );
  std::vector<std::optional<Candidate>> refined( n_refine );
  Vector theta( theta_hat.begin(), theta_hat.end() );
  parallel_for( n_refine, [&]( std::size_t r ){
    auto phi = [&]( std::span<double const> x ){
      try{
        return squared_distance( pair, DesignPoint( Vector( x.begin(), x.end() ) ), theta );
      }
      catch( EvaluationError const& ){
        return -std::numeric_limits<double>::infinity();
      }
    };
    try{
      auto loc = detail::maximize_bounded( phi, candidates[order[r]].coords, box.lower, box.upper, cfg.local_tol, step );
      DesignPoint p( std::move( loc.x ) );
      refined[r] = Candidate{ p, squared_distance( pair, p, theta ) };
    }
    catch( EvaluationError const& ){
    }
  } );
  for( auto const& c : refined )
    if( c && better( *c, best ) ) best = *c;
  return { best.point, best.value };
}

} // namespace discrim
