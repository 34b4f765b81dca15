#include "discrim/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "discrim/parallel.hpp"

namespace discrim
{

namespace detail
{

namespace
{

constexpr double fd_rel_step = 1e-7;

// forward differences, stepping backwards at an upper bound
void fd_jacobian( ResidualFn const& residual, Eigen::VectorXd const& x, Eigen::VectorXd const& r,
                  ParameterSpace const& box, Eigen::MatrixXd& jac )
{
  Eigen::VectorXd xp = x, rp( r.size() );
  for( Eigen::Index j = 0; j < x.size(); ++j ){
    auto const uj = static_cast<std::size_t>( j );
    double h = fd_rel_step * std::max( std::abs( x[j] ), 1. );
    if( x[j] + h > box.upper[uj] ) h = -h;
    xp[j] = x[j] + h;
    h = xp[j] - x[j];
    residual( std::span<double const>( xp.data(), xp.size() ), std::span<double>( rp.data(), rp.size() ) );
    jac.col( j ) = ( rp - r ) / h;
    xp[j] = x[j];
  }
}

} // namespace

BoundedLsqResult solve_bounded_lsq( ResidualFn const& residual, std::size_t n_residuals, Vector x0,
                                    ParameterSpace const& box, double tol, int max_iters )
{
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  auto const n = static_cast<Eigen::Index>( x0.size() );
  auto const m = static_cast<Eigen::Index>( n_residuals );
  Vector clamped = box.clamp( x0 );
  VectorXd x = Eigen::Map<VectorXd>( clamped.data(), n );
  VectorXd r( m ), rt( m );
  auto eval = [&]( VectorXd const& at, VectorXd& out ){
    residual( std::span<double const>( at.data(), at.size() ), std::span<double>( out.data(), out.size() ) );
  };

  eval( x, r );
  double cost = 0.5 * r.squaredNorm();
  MatrixXd jac( m, n );

  BoundedLsqResult res;
  auto finish = [&]( bool ok, int it ){
    res.x.assign( x.data(), x.data() + n );
    res.cost = cost;
    res.iterations = it;
    res.converged = ok;
    return res;
  };
  if( cost == 0. ) return finish( true, 0 );

  fd_jacobian( residual, x, r, box, jac );
  double mu = -1., nu = 2.;
  double const ftol = 1e-2 * tol;

  for( int it = 0; it < max_iters; ++it ){
    VectorXd const g = jac.transpose() * r;

    // projected gradient and free variables
    std::vector<Eigen::Index> free;
    double pg_norm = 0.;
    for( Eigen::Index j = 0; j < n; ++j ){
      auto const uj = static_cast<std::size_t>( j );
      double const pj = std::clamp( x[j] - g[j], box.lower[uj], box.upper[uj] ) - x[j];
      pg_norm = std::max( pg_norm, std::abs( pj ) );
      bool const blocked = ( x[j] <= box.lower[uj] && g[j] > 0. ) || ( x[j] >= box.upper[uj] && g[j] < 0. );
      if( !blocked ) free.push_back( j );
    }
    if( pg_norm <= tol || free.empty() ) return finish( true, it );

    auto const nf = static_cast<Eigen::Index>( free.size() );
    MatrixXd jf( m, nf );
    VectorXd gf( nf );
    for( Eigen::Index k = 0; k < nf; ++k ){
      jf.col( k ) = jac.col( free[static_cast<std::size_t>( k )] );
      gf[k] = g[free[static_cast<std::size_t>( k )]];
    }
    MatrixXd const jtj = jf.transpose() * jf;
    VectorXd scale = jtj.diagonal();
    double const max_diag = scale.maxCoeff();
    for( Eigen::Index k = 0; k < nf; ++k ) scale[k] = std::max( scale[k], 1e-12 * max_diag + 1e-300 );
    if( mu < 0. ) mu = 1e-3;

    bool accepted = false;
    while( !accepted ){
      MatrixXd a = jtj;
      a.diagonal() += mu * scale;
      VectorXd const step_f = a.ldlt().solve( -gf );
      VectorXd xt = x;
      for( Eigen::Index k = 0; k < nf; ++k ){
        auto const j = free[static_cast<std::size_t>( k )];
        auto const uj = static_cast<std::size_t>( j );
        xt[j] = std::clamp( x[j] + step_f[k], box.lower[uj], box.upper[uj] );
      }
      VectorXd const s = xt - x;
      double const s_norm = s.norm();
      if( !std::isfinite( s_norm ) ) return finish( false, it );
      if( s_norm <= tol * ( x.norm() + tol ) ) return finish( true, it );

      double const predicted = -( g.dot( s ) + 0.5 * ( jac * s ).squaredNorm() );
      double cost_t = std::numeric_limits<double>::infinity();
      try{
        eval( xt, rt );
        cost_t = 0.5 * rt.squaredNorm();
      }
      catch( EvaluationError const& ){
      }
      double const actual = cost - cost_t;
      double const rho = predicted > 0. ? actual / predicted : -1.;

      if( rho > 1e-4 && std::isfinite( cost_t ) ){
        accepted = true;
        x = xt;
        r = rt;
        cost = cost_t;
        mu *= std::max( 1. / 3., 1. - std::pow( 2. * rho - 1., 3 ) );
        nu = 2.;
        if( cost == 0. || actual <= ftol * cost_t ) return finish( true, it + 1 );
        fd_jacobian( residual, x, r, box, jac );
      }
      else{
        mu *= nu;
        nu *= 2.;
        if( mu > 1e20 ) return finish( true, it + 1 );
      }
    }
  }
  return finish( false, max_iters );
}

} // namespace detail

FitResult fit_parameters( ModelPair const& pair, Design const& design, std::optional<Vector> const& warm_start,
                          FitConfig const& cfg )
{
  if( design.empty() ) throw InvalidArgument( "cannot fit parameters on an empty design" );
  if( cfg.n_starts < 0 || !( cfg.lambda >= 0. ) ) throw InvalidArgument( "invalid fit configuration" );
  auto const& box = pair.parameter_space;
  std::size_t const d_theta = box.dim();
  std::size_t const d_y = pair.response_dim;

  // residual rows only for points with positive effective weight
  std::vector<std::size_t> rows;
  Vector sqrt_w;
  std::vector<Vector> y_ref;
  for( std::size_t i = 0; i < design.size(); ++i ){
    double const w = design.weight( i ) + cfg.lambda;
    if( w <= 0. ) continue;
    rows.push_back( i );
    sqrt_w.push_back( std::sqrt( w ) );
    y_ref.push_back( pair.eval_reference( design.point( i ) ) );
  }
  std::size_t const n_res = rows.size() * d_y;

  auto residual = [&]( std::span<double const> theta, std::span<double> r ){
    Vector y2( d_y );
    for( std::size_t k = 0; k < rows.size(); ++k ){
      pair.alternative( design.point( rows[k] ).coords, theta, y2 );
      for( std::size_t c = 0; c < d_y; ++c ){
        double const v = sqrt_w[k] * ( y_ref[k][c] - y2[c] );
        if( !std::isfinite( v ) )
          throw EvaluationError( "non-finite residual", design.point( rows[k] ).coords,
                                 Vector( theta.begin(), theta.end() ) );
        r[k * d_y + c] = v;
      }
    }
  };

  std::vector<Vector> starts;
  if( warm_start ){
    if( warm_start->size() != d_theta ) throw InvalidArgument( "warm start has the wrong dimension" );
    starts.push_back( box.clamp( *warm_start ) );
  }
  for( auto& p : sobol_points( d_theta, static_cast<std::size_t>( cfg.n_starts ), box ) ) starts.push_back( std::move( p ) );
  if( starts.empty() ) throw InvalidArgument( "fit_parameters needs a warm start or at least one Sobol start" );

  struct Outcome
  {
    detail::BoundedLsqResult local;
    std::string error;
  };
  std::vector<Outcome> outcomes( starts.size() );
  parallel_for( starts.size(), [&]( std::size_t s ){
    try{
      outcomes[s].local = detail::solve_bounded_lsq( residual, n_res, starts[s], box, cfg.local_tol, cfg.max_local_iters );
    }
    catch( EvaluationError const& e ){
      outcomes[s].error = e.what();
    }
  } );

  FitResult result;
  int best = -1, best_any = -1;
  for( std::size_t s = 0; s < outcomes.size(); ++s ){
    auto const& o = outcomes[s];
    if( !o.error.empty() ){
      result.skipped.push_back( fmt::format( "start {}: {}", s, o.error ) );
      continue;
    }
    if( best_any < 0 || o.local.cost < outcomes[static_cast<std::size_t>( best_any )].local.cost )
      best_any = static_cast<int>( s );
    if( !o.local.converged ) continue;
    if( best < 0 || o.local.cost < outcomes[static_cast<std::size_t>( best )].local.cost ) best = static_cast<int>( s );
  }
  if( best < 0 ){
    if( best_any < 0 ) throw FitError( "every least-squares start failed to evaluate", {} );
    throw FitError( "no least-squares start converged", outcomes[static_cast<std::size_t>( best_any )].local.x );
  }

  auto const& win = outcomes[static_cast<std::size_t>( best )].local;
  result.theta_hat = win.x;
  result.start_index = best;
  result.regularized_objective = 2. * win.cost;
  double objective = 0.;
  Vector y2( d_y );
  for( std::size_t i = 0; i < design.size(); ++i ){
    if( design.weight( i ) == 0. ) continue;
    pair.alternative( design.point( i ).coords, result.theta_hat, y2 );
    objective += design.weight( i ) * squared_norm_diff( pair.eval_reference( design.point( i ) ), y2 );
  }
  result.objective = objective;
  return result;
}

} // namespace discrim
