#include "discrim/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace discrim
{

namespace
{

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Columns that coincide exactly would only duplicate constraints.
MatrixXd unique_columns( MatrixXd const& phi )
{
  std::vector<Eigen::Index> keep;
  for( Eigen::Index j = 0; j < phi.cols(); ++j ){
    bool dup = false;
    for( auto k : keep )
      if( phi.col( k ) == phi.col( j ) ){
        dup = true;
        break;
      }
    if( !dup ) keep.push_back( j );
  }
  MatrixXd out( phi.rows(), static_cast<Eigen::Index>( keep.size() ) );
  for( std::size_t k = 0; k < keep.size(); ++k ) out.col( static_cast<Eigen::Index>( k ) ) = phi.col( keep[k] );
  return out;
}

// Rows that agree to rel_tol (relative to the largest entry) describe interchangeable
// experiments; each row maps to the first row of its class.
std::vector<Eigen::Index> row_classes( MatrixXd const& phi, double rel_tol )
{
  double const tol = rel_tol * phi.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> cls( static_cast<std::size_t>( phi.rows() ) );
  for( Eigen::Index i = 0; i < phi.rows(); ++i ){
    cls[static_cast<std::size_t>( i )] = i;
    for( Eigen::Index k = 0; k < i; ++k ){
      if( cls[static_cast<std::size_t>( k )] != k ) continue;
      if( ( phi.row( i ) - phi.row( k ) ).cwiseAbs().maxCoeff() <= tol ){
        cls[static_cast<std::size_t>( i )] = k;
        break;
      }
    }
  }
  return cls;
}

struct RawSolution
{
  VectorXd w;
  bool ok = false;
  int iterations = 0;
};

////////////////////////////////////////////////////////////////////////
// Mehrotra predictor-corrector on the dual problem
//   min u  s.t.  phi zeta - u 1 + v = 0,  1' zeta = 1,  (zeta, u, v) >= 0
// whose equality multipliers y give w = -y(0:N).
////////////////////////////////////////////////////////////////////////
RawSolution solve_interior_point( MatrixXd const& phi )
{
  Eigen::Index const N = phi.rows(), M = phi.cols();
  Eigen::Index const m = N + 1, n = M + 1 + N;

  MatrixXd A = MatrixXd::Zero( m, n );
  A.topLeftCorner( N, M ) = phi;
  A.block( 0, M, N, 1 ).setConstant( -1. );
  A.block( 0, M + 1, N, N ).setIdentity();
  A.block( N, 0, 1, M ).setConstant( 1. );
  VectorXd b = VectorXd::Zero( m );
  b[N] = 1.;
  VectorXd c = VectorXd::Zero( n );
  c[M] = 1.;

  constexpr double tol = 1e-12;
  constexpr int max_iter = 200;

  auto factor_solve = []( MatrixXd const& K, VectorXd const& rhs ){
    Eigen::LDLT<MatrixXd> ldlt( K );
    return VectorXd( ldlt.solve( rhs ) );
  };

  // starting point (Mehrotra 1992)
  MatrixXd aat = A * A.transpose();
  VectorXd x = A.transpose() * factor_solve( aat, b );
  VectorXd y = factor_solve( aat, A * c );
  VectorXd s = c - A.transpose() * y;
  x.array() += std::max( -1.5 * x.minCoeff(), 0. );
  s.array() += std::max( -1.5 * s.minCoeff(), 0. );
  {
    double const xs = x.dot( s );
    x.array() += 0.5 * xs / s.sum();
    s.array() += 0.5 * xs / x.sum();
  }
  if( !x.allFinite() || !s.allFinite() || x.minCoeff() <= 0. || s.minCoeff() <= 0. ){
    x.setOnes();
    s.setOnes();
    y.setZero();
  }

  auto max_step = []( VectorXd const& v, VectorXd const& dv ){
    double a = 1.;
    for( Eigen::Index i = 0; i < v.size(); ++i )
      if( dv[i] < 0. ) a = std::min( a, -v[i] / dv[i] );
    return a;
  };

  RawSolution out;
  double const bn = 1. + b.norm(), cn = 1. + c.norm();
  for( int it = 0; it < max_iter; ++it ){
    VectorXd const rb = A * x - b;
    VectorXd const rc = A.transpose() * y + s - c;
    double const mu = x.dot( s ) / static_cast<double>( n );
    double const pobj = c.dot( x ), dobj = b.dot( y );
    out.iterations = it;
    if( rb.norm() / bn <= tol && rc.norm() / cn <= tol && std::abs( pobj - dobj ) / ( 1. + std::abs( pobj ) ) <= tol ){
      out.ok = true;
      break;
    }

    VectorXd const d = x.cwiseQuotient( s );
    MatrixXd K = A * d.asDiagonal() * A.transpose();
    K.diagonal().array() += 1e-14 * std::max( 1., K.diagonal().maxCoeff() );
    Eigen::LDLT<MatrixXd> ldlt( K );
    if( ldlt.info() != Eigen::Success ) break;

    auto direction = [&]( VectorXd const& rxs, VectorXd& dx, VectorXd& dy, VectorXd& ds ){
      VectorXd const sinv_rxs = rxs.cwiseQuotient( s );
      dy = ldlt.solve( -rb - A * ( sinv_rxs + d.cwiseProduct( rc ) ) );
      ds = -rc - A.transpose() * dy;
      dx = sinv_rxs - d.cwiseProduct( ds );
    };

    VectorXd dx, dy, ds;
    VectorXd const xs = x.cwiseProduct( s );
    direction( -xs, dx, dy, ds );
    double const ap_aff = max_step( x, dx ), ad_aff = max_step( s, ds );
    double const mu_aff = ( x + ap_aff * dx ).dot( s + ad_aff * ds ) / static_cast<double>( n );
    double const sigma = std::pow( mu_aff / mu, 3 );

    VectorXd rxs = -xs - dx.cwiseProduct( ds );
    rxs.array() += sigma * mu;
    direction( rxs, dx, dy, ds );
    double const ap = std::min( 1., 0.995 * max_step( x, dx ) );
    double const ad = std::min( 1., 0.995 * max_step( s, ds ) );
    x += ap * dx;
    y += ad * dy;
    s += ad * ds;
    if( !x.allFinite() || !y.allFinite() || !s.allFinite() ) break;
  }

  out.w = -y.head( N );
  return out;
}

////////////////////////////////////////////////////////////////////////
// Dense tableau simplex for the primal problem
//   max t  s.t.  t - phi(:, j)' w <= 0,  1' w <= 1,  (w, t) >= 0
// Dantzig pricing, Bland's rule after a run of degenerate pivots.
////////////////////////////////////////////////////////////////////////
RawSolution solve_simplex( MatrixXd const& phi )
{
  Eigen::Index const N = phi.rows(), M = phi.cols();
  Eigen::Index const rows = M + 1, nvar = N + 1;
  constexpr double eps = 1e-11;

  // tableau: rows 0..rows-1 constraints, last row objective (reduced costs), last column rhs
  MatrixXd T = MatrixXd::Zero( rows + 1, nvar + rows + 1 );
  for( Eigen::Index j = 0; j < M; ++j ){
    T.block( j, 0, 1, N ) = -phi.col( j ).transpose();
    T( j, N ) = 1.;
  }
  T.block( M, 0, 1, N ).setConstant( 1. );
  T.block( 0, nvar, rows, rows ).setIdentity();
  T( M, nvar + rows ) = 1.;
  T( rows, N ) = -1.;  // maximise t  <=>  reduced cost row holds -c

  std::vector<Eigen::Index> basis( static_cast<std::size_t>( rows ) );
  std::iota( basis.begin(), basis.end(), nvar );

  RawSolution out;
  int degenerate_run = 0;
  constexpr int max_pivots = 50000;
  for( int it = 0; it < max_pivots; ++it ){
    bool const bland = degenerate_run > 50;
    Eigen::Index enter = -1;
    double best = -eps;
    for( Eigen::Index k = 0; k < nvar + rows; ++k ){
      if( T( rows, k ) < best ){
        enter = k;
        if( bland ) break;
        best = T( rows, k );
      }
    }
    out.iterations = it;
    if( enter < 0 ){
      out.ok = true;
      break;
    }
    Eigen::Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for( Eigen::Index r = 0; r < rows; ++r ){
      if( T( r, enter ) <= eps ) continue;
      double const ratio = T( r, nvar + rows ) / T( r, enter );
      if( ratio < best_ratio - 1e-15
          || ( ratio <= best_ratio + 1e-15 && leave >= 0
               && basis[static_cast<std::size_t>( r )] < basis[static_cast<std::size_t>( leave )] ) ){
        best_ratio = std::min( ratio, best_ratio );
        leave = r;
      }
    }
    if( leave < 0 ) break;  // unbounded cannot happen for this LP
    degenerate_run = best_ratio <= 1e-15 ? degenerate_run + 1 : 0;

    T.row( leave ) /= T( leave, enter );
    for( Eigen::Index r = 0; r <= rows; ++r ){
      if( r == leave ) continue;
      double const f = T( r, enter );
      if( f != 0. ) T.row( r ) -= f * T.row( leave );
    }
    basis[static_cast<std::size_t>( leave )] = enter;
  }

  out.w = VectorXd::Zero( N );
  for( Eigen::Index r = 0; r < rows; ++r ){
    auto const v = basis[static_cast<std::size_t>( r )];
    if( v < N ) out.w[v] = T( r, nvar + rows );
  }
  return out;
}

} // namespace

WeightLpSolution solve_weight_lp( WeightLpInstance const& instance, LpMethod method )
{
  auto const& phi_in = instance.phi;
  if( phi_in.rows() < 1 || phi_in.cols() < 1 ) throw InvalidArgument( "weight LP needs at least one point and one parameter" );
  if( !phi_in.allFinite() || phi_in.minCoeff() < 0. )
    throw InvalidArgument( "weight LP coefficients must be finite and nonnegative" );

  Eigen::Index const N = phi_in.rows();
  WeightLpSolution sol;
  VectorXd w = VectorXd::Zero( N );

  auto const cls = row_classes( phi_in, duplicate_row_tol );
  std::vector<Eigen::Index> reps;
  for( Eigen::Index i = 0; i < N; ++i )
    if( cls[static_cast<std::size_t>( i )] == i ) reps.push_back( i );
  auto const R = static_cast<Eigen::Index>( reps.size() );
  VectorXd wr;

  if( R == 1 ){
    wr = VectorXd::Ones( 1 );
  }
  else{
    MatrixXd phi( R, phi_in.cols() );
    for( Eigen::Index r = 0; r < R; ++r ) phi.row( r ) = phi_in.row( reps[static_cast<std::size_t>( r )] );
    phi = unique_columns( phi );
    double const scale = phi.maxCoeff();
    if( scale > 0. ) phi /= scale;
    RawSolution raw = scale > 0. ? ( method == LpMethod::simplex ? solve_simplex( phi ) : solve_interior_point( phi ) )
                                 : RawSolution{ VectorXd::Constant( R, 1. / static_cast<double>( R ) ), true, 0 };
    if( !raw.ok && method == LpMethod::interior_point ){
      RawSolution vertex = solve_simplex( phi );
      if( vertex.ok ){
        vertex.iterations += raw.iterations;
        raw = std::move( vertex );
      }
    }
    sol.iterations = raw.iterations;
    if( !raw.ok || !raw.w.allFinite() ) sol.status = LpStatus::infeasible_numerics;
    wr = raw.w.allFinite() ? raw.w : VectorXd::Constant( R, 1. / static_cast<double>( R ) );
  }
  for( Eigen::Index r = 0; r < R; ++r ) w[reps[static_cast<std::size_t>( r )]] = wr[r];

  for( Eigen::Index i = 0; i < N; ++i ){
    if( w[i] < 0. ){
      if( w[i] < -1e-12 && method == LpMethod::simplex ) sol.status = LpStatus::infeasible_numerics;
      w[i] = 0.;
    }
  }
  double const sum = w.sum();
  if( !( sum > 0. ) ) w.setConstant( 1. / static_cast<double>( N ) );
  else w /= sum;

  sol.weights.assign( w.data(), w.data() + N );
  VectorXd const col_values = phi_in.transpose() * w;
  sol.t = col_values.minCoeff();
  return sol;
}

} // namespace discrim
