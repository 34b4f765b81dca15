#include "discrim/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "discrim/parallel.hpp"

namespace discrim
{

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since( Clock::time_point t0 )
{
  return std::chrono::duration<double>( Clock::now() - t0 ).count();
}

// accumulates into a slot for the lifetime of the object
class PhaseTimer
{
public:
  explicit PhaseTimer( double& slot ) : slot_( slot ), t0_( Clock::now() ) {}
  ~PhaseTimer() { slot_ += seconds_since( t0_ ); }
  PhaseTimer( PhaseTimer const& ) = delete;
  PhaseTimer& operator=( PhaseTimer const& ) = delete;

private:
  double& slot_;
  Clock::time_point t0_;
};

FitConfig fit_config( AlgoParams const& p )
{
  FitConfig c;
  c.n_starts = p.n_theta_starts;
  c.lambda = p.lambda;
  return c;
}

bool contains_point( std::vector<DesignPoint> const& pts, DesignPoint const& x )
{
  return std::any_of( pts.begin(), pts.end(), [&]( DesignPoint const& p ){ return same_point( p, x ); } );
}

void check_initial( ModelPair const& pair, DesignSpace const& space, Design const& initial )
{
  if( initial.empty() ) throw InvalidArgument( "initial design is empty" );
  if( initial.dim() != space.dim() )
    throw InvalidArgument( fmt::format( "initial design has dimension {}, design space has {}", initial.dim(), space.dim() ) );
  for( std::size_t i = 0; i < initial.size(); ++i )
    if( !space.contains( initial.point( i ) ) )
      throw InvalidArgument( fmt::format( "initial design point {} lies outside the design space", i ) );
  if( pair.parameter_space.dim() == 0 ) throw InvalidArgument( "alternative model has no parameters" );
}

void check_theta_disc( ModelPair const& pair, std::vector<Vector> const& thetas )
{
  for( auto const& t : thetas ){
    if( t.size() != pair.parameter_space.dim() ) throw InvalidArgument( "parameter discretization has the wrong dimension" );
    if( !pair.parameter_space.contains( t ) ) throw InvalidArgument( "parameter discretization leaves the parameter space" );
  }
}

// support-only min gap; the literal stopping quantity
double support_gap( ModelPair const& pair, Design const& design, std::span<double const> theta, double t )
{
  double gap = std::numeric_limits<double>::infinity();
  for( std::size_t i = 0; i < design.size(); ++i )
    if( design.weight( i ) > 0. ) gap = std::min( gap, squared_distance( pair, design.point( i ), theta ) - t );
  return gap;
}

} // namespace

AlgoParams AlgoParams::vdm_defaults()
{
  AlgoParams p;
  p.max_iter = 1000;
  p.lambda = 0.;
  return p;
}

void AlgoParams::validate() const
{
  if( !( eps > 0. ) ) throw InvalidArgument( "eps must be positive" );
  if( max_iter < 1 ) throw InvalidArgument( "max_iter must be positive" );
  if( n_theta_starts < 0 ) throw InvalidArgument( "n_theta_starts must be nonnegative" );
  if( !( lambda >= 0. ) ) throw InvalidArgument( "lambda must be nonnegative" );
  if( !( eps_sip > 0. ) ) throw InvalidArgument( "eps_sip must be positive" );
  if( max_iter_sip < 1 ) throw InvalidArgument( "max_iter_sip must be positive" );
  if( max_sip_tightenings < 0 ) throw InvalidArgument( "max_sip_tightenings must be nonnegative" );
}

std::string to_string( SolveStatus s )
{
  switch( s ){
  case SolveStatus::converged: return "converged";
  case SolveStatus::max_iter: return "max_iter";
  case SolveStatus::stalled: return "stalled";
  case SolveStatus::error: return "error";
  }
  return "unknown";
}

void PhiTable::sync( std::vector<DesignPoint> const& candidates, std::vector<Vector> const& thetas )
{
  auto extends = []( auto const& old_list, auto const& new_list ){
    return old_list.size() <= new_list.size() && std::equal( old_list.begin(), old_list.end(), new_list.begin() );
  };
  if( !extends( candidates_, candidates ) || !extends( thetas_, thetas ) ){
    candidates_.clear();
    thetas_.clear();
    phi_.resize( 0, 0 );
  }
  auto const n0 = static_cast<Eigen::Index>( candidates_.size() ), m0 = static_cast<Eigen::Index>( thetas_.size() );
  auto const n = static_cast<Eigen::Index>( candidates.size() ), m = static_cast<Eigen::Index>( thetas.size() );
  if( n == n0 && m == m0 ) return;

  Eigen::MatrixXd phi( n, m );
  phi.topLeftCorner( n0, m0 ) = phi_;
  // new cells: rows >= n0 (all columns) and columns >= m0 of the old rows
  std::size_t const cells = static_cast<std::size_t>( ( n - n0 ) * m + n0 * ( m - m0 ) );
  parallel_for( cells, [&]( std::size_t k ){
    auto const kk = static_cast<Eigen::Index>( k );
    Eigen::Index i, j;
    if( kk < ( n - n0 ) * m ){
      i = n0 + kk / m;
      j = kk % m;
    }
    else{
      auto const r = kk - ( n - n0 ) * m;
      i = r / ( m - m0 );
      j = m0 + r % ( m - m0 );
    }
    phi( i, j ) = squared_distance( *pair_, candidates[static_cast<std::size_t>( i )], thetas[static_cast<std::size_t>( j )] );
  } );
  phi_ = std::move( phi );
  candidates_ = candidates;
  thetas_ = thetas;
}

DiscResult disc_md( ModelPair const& pair, std::vector<DesignPoint> const& candidates, Design const& initial,
                    std::vector<Vector> theta_disc, AlgoParams const& params, PhiTable* cache )
{
  params.validate();
  if( candidates.empty() ) throw InvalidArgument( "disc_md needs at least one candidate" );
  if( theta_disc.empty() ) throw InvalidArgument( "disc_md needs a nonempty parameter discretization" );
  for( std::size_t i = 0; i < candidates.size(); ++i )
    for( std::size_t k = 0; k < i; ++k )
      if( same_point( candidates[i], candidates[k] ) ) throw InvalidArgument( fmt::format( "candidates {} and {} coincide", k, i ) );
  for( std::size_t i = 0; i < initial.size(); ++i )
    if( !contains_point( candidates, initial.point( i ) ) )
      throw InvalidArgument( fmt::format( "initial design point {} is not a candidate", i ) );
  check_theta_disc( pair, theta_disc );

  PhiTable local( pair );
  PhiTable& table = cache ? *cache : local;
  FitConfig const fcfg = fit_config( params );
  auto const t_start = Clock::now();

  struct Weights
  {
    Vector w;
    double t = 0.;
  };

  DiscResult out;
  Vector warm = theta_disc.back();
  double lp_s = 0., ls_s = 0.;

  LsipProblem<Weights, Vector> problem;
  problem.initial_indices = std::move( theta_disc );
  problem.upper_solver = [&]( std::vector<Vector> const& thetas ){
    PhaseTimer timer( lp_s );
    table.sync( candidates, thetas );
    auto sol = solve_weight_lp( WeightLpInstance{ table.matrix() }, params.lp_method );
    if( sol.status != LpStatus::optimal )
      spdlog::debug( "weight LP finished with numerical difficulties after {} iterations", sol.iterations );
    return Weights{ std::move( sol.weights ), sol.t };
  };
  problem.lower_solver = [&]( Weights const& x ){
    PhaseTimer timer( ls_s );
    out.fit = fit_parameters( pair, Design( candidates, x.w ), warm, fcfg );
    warm = out.fit.theta_hat;
    return out.fit.theta_hat;
  };
  problem.constraint = [&]( Weights const& x, Vector const& theta ){
    return t_value( pair, Design( candidates, x.w ), theta ) - x.t;
  };

  auto on_iter = [&]( int k, Weights const& x, Vector const&, double g ){
    IterationRecord rec;
    rec.kind = IterationRecord::Kind::inner;
    rec.inner_iteration = k;
    rec.t_lp = x.t;
    rec.t_value = x.t + g;
    rec.accuracy = -g;
    rec.min_support_gap = std::numeric_limits<double>::quiet_NaN();
    rec.n_theta = problem.initial_indices.size() + static_cast<std::size_t>( k );
    rec.n_candidates = candidates.size();
    rec.wall_seconds = seconds_since( t_start );
    rec.lp_seconds = lp_s;
    rec.ls_seconds = ls_s;
    out.history.push_back( rec );
    spdlog::debug( "  disc-md {:3d}: t_lp {:.12e}  T {:.12e}  gap {:.3e}  |theta| {}", k, x.t, rec.t_value, -g,
                   rec.n_theta );
  };

  auto bf = blankenship_falk<Weights, Vector>( problem, params.eps_sip, params.max_iter_sip, on_iter );
  out.candidate_weights = bf.x.w;
  out.t_lp = bf.x.t;
  out.converged = bf.converged;
  out.iterations = bf.iterations;
  out.theta_disc = std::move( bf.indices );
  // the final lower-level solution is kept even when it closed the gap
  if( bf.converged ) out.theta_disc.push_back( out.fit.theta_hat );
  out.design = prune_design( Design( candidates, bf.x.w ) );
  return out;
}

OptimalityReport check_optimality( ModelPair const& pair, Design const& design, std::span<double const> theta_hat,
                                   DesignSpace const& space, GlobalSearchConfig const& gcfg )
{
  if( design.empty() ) throw InvalidArgument( "cannot check an empty design" );
  if( design.dim() != space.dim() )
    throw InvalidArgument( fmt::format( "design has dimension {}, design space has {}", design.dim(), space.dim() ) );
  if( theta_hat.size() != pair.parameter_space.dim() ) throw InvalidArgument( "theta_hat has the wrong dimension" );
  OptimalityReport rep;
  rep.t_value = t_value( pair, design, theta_hat );
  auto const best = maximize_distance( pair, theta_hat, space, gcfg );
  rep.max_psi = best.value - rep.t_value;
  rep.worst_point = best.point;
  rep.min_support_gap = support_gap( pair, design, theta_hat, rep.t_value );
  return rep;
}

namespace
{

// shared bookkeeping of the outer loops
struct OuterState
{
  Clock::time_point t0 = Clock::now();
  double lp_s = 0., ls_s = 0., gs_s = 0.;
  SolveResult result;

  void record( int n, double t, double max_psi, double gap, std::size_t n_theta, std::size_t n_cand )
  {
    IterationRecord rec;
    rec.kind = IterationRecord::Kind::outer;
    rec.iteration = n;
    rec.t_value = t;
    rec.t_lp = std::numeric_limits<double>::quiet_NaN();
    rec.accuracy = max_psi;
    rec.min_support_gap = gap;
    rec.n_theta = n_theta;
    rec.n_candidates = n_cand;
    rec.wall_seconds = seconds_since( t0 );
    rec.lp_seconds = lp_s;
    rec.ls_seconds = ls_s;
    rec.global_seconds = gs_s;
    result.history.push_back( rec );
  }

  void splice_inner( int n, std::vector<IterationRecord> inner, double lp0, double ls0 )
  {
    for( auto& r : inner ){
      r.iteration = n;
      r.lp_seconds += lp0;
      r.ls_seconds += ls0;
      r.global_seconds = gs_s;
      result.history.push_back( r );
    }
  }
};

} // namespace

SolveResult two_adapt_md( ModelPair const& pair, DesignSpace const& space, Design const& initial,
                          std::vector<Vector> theta_disc0, AlgoParams const& params, GlobalSearchConfig const& gcfg )
{
  params.validate();
  check_initial( pair, space, initial );
  check_theta_disc( pair, theta_disc0 );
  FitConfig const fcfg = fit_config( params );

  OuterState st;
  auto& res = st.result;
  std::vector<DesignPoint> candidates;
  for( auto const& p : initial.points() )
    if( !contains_point( candidates, p ) ) candidates.push_back( p );

  std::vector<Vector> thetas = std::move( theta_disc0 );
  try{
    if( thetas.empty() ){
      PhaseTimer timer( st.ls_s );
      thetas.push_back( fit_parameters( pair, initial, std::nullopt, fcfg ).theta_hat );
    }

    PhiTable table( pair );
    Design current = initial;
    AlgoParams inner = params;
    int tightenings = 0;
    res.status = SolveStatus::max_iter;
    for( int n = 0; n < params.max_iter; ++n ){
      res.iterations = n + 1;
      double const lp0 = st.lp_s, ls0 = st.ls_s;
      auto const t_disc = Clock::now();
      auto disc = disc_md( pair, candidates, Design( candidates, Vector( candidates.size(), 1. / static_cast<double>( candidates.size() ) ) ),
                           thetas, inner, &table );
      double const disc_wall = seconds_since( t_disc );
      double lp_in = 0., ls_in = 0.;
      if( !disc.history.empty() ){
        lp_in = disc.history.back().lp_seconds;
        ls_in = disc.history.back().ls_seconds;
      }
      st.lp_s += lp_in;
      st.ls_s += ls_in;
      for( auto& r : disc.history ) r.wall_seconds += seconds_since( st.t0 ) - disc_wall;
      st.splice_inner( n, std::move( disc.history ), lp0, ls0 );
      thetas = std::move( disc.theta_disc );
      current = disc.design;

      FitResult fit;
      {
        PhaseTimer timer( st.ls_s );
        fit = fit_parameters( pair, current, disc.fit.theta_hat, fcfg );
      }
      bool const theta_known = std::find( thetas.begin(), thetas.end(), fit.theta_hat ) != thetas.end();
      if( !theta_known ) thetas.push_back( fit.theta_hat );

      DistanceMaximum best;
      {
        PhaseTimer timer( st.gs_s );
        best = maximize_distance( pair, fit.theta_hat, space, gcfg );
      }
      double const t = t_value( pair, current, fit.theta_hat );
      double const max_psi = best.value - t;
      double const gap = support_gap( pair, current, fit.theta_hat, t );
      st.record( n, t, max_psi, gap, thetas.size(), candidates.size() );
      spdlog::info( "2-adapt {:3d}: T {:.12e}  max_psi {:.3e}  support {}  |X| {}  |theta| {}", n, t, max_psi,
                    current.size(), candidates.size(), thetas.size() );

      res.design = current;
      res.theta_hat = fit.theta_hat;
      res.t_value = t;
      res.accuracy = max_psi;
      res.min_support_gap = gap;

      if( gap <= params.eps && max_psi <= params.eps ){
        res.converged = true;
        res.status = SolveStatus::converged;
        break;
      }
      if( contains_point( candidates, best.point ) ){
        if( tightenings < params.max_sip_tightenings ){
          ++tightenings;
          inner.eps_sip /= 10.;
          spdlog::info( "search returned an existing candidate; eps_sip tightened to {:.1e}", inner.eps_sip );
          continue;
        }
        res.status = SolveStatus::stalled;
        res.message = fmt::format( "stalled: the maximiser of phi is already a candidate and max_psi = {:.6e} > eps",
                                   max_psi );
        spdlog::warn( "{}", res.message );
        break;
      }
      candidates.push_back( best.point );
    }
    if( res.status == SolveStatus::max_iter )
      res.message = fmt::format( "maximum number of iterations ({}) reached", params.max_iter );
  }
  catch( std::exception const& e ){
    res.converged = false;
    res.status = SolveStatus::error;
    res.message = e.what();
    if( res.design.empty() ) res.design = initial;
  }
  return res;
}

SolveResult solve_disc( ModelPair const& pair, DesignSpace const& space, Design const& initial,
                        std::vector<Vector> theta_disc0, AlgoParams const& params, GlobalSearchConfig const& gcfg )
{
  params.validate();
  check_initial( pair, space, initial );
  check_theta_disc( pair, theta_disc0 );
  FitConfig const fcfg = fit_config( params );

  OuterState st;
  auto& res = st.result;
  try{
    std::vector<DesignPoint> candidates = space.is_lattice() ? space.enumerate() : box_grid( space.as_box(), gcfg.grid_per_dim );
    for( auto const& p : initial.points() )
      if( !contains_point( candidates, p ) ) candidates.push_back( p );
    if( theta_disc0.empty() ){
      PhaseTimer timer( st.ls_s );
      theta_disc0.push_back( fit_parameters( pair, initial, std::nullopt, fcfg ).theta_hat );
    }
    AlgoParams inner = params;
    inner.max_iter_sip = std::max( params.max_iter_sip, params.max_iter );
    auto disc = disc_md( pair, candidates, initial, std::move( theta_disc0 ), inner );
    double const lp_in = disc.history.empty() ? 0. : disc.history.back().lp_seconds;
    double const ls_in = disc.history.empty() ? 0. : disc.history.back().ls_seconds;
    st.splice_inner( 0, std::move( disc.history ), 0., st.ls_s );
    st.lp_s += lp_in;
    st.ls_s += ls_in;

    FitResult fit;
    {
      PhaseTimer timer( st.ls_s );
      fit = fit_parameters( pair, disc.design, disc.fit.theta_hat, fcfg );
    }
    OptimalityReport rep;
    {
      PhaseTimer timer( st.gs_s );
      rep = check_optimality( pair, disc.design, fit.theta_hat, space, gcfg );
    }
    st.record( 0, rep.t_value, rep.max_psi, rep.min_support_gap, disc.theta_disc.size(), candidates.size() );
    res.design = disc.design;
    res.theta_hat = fit.theta_hat;
    res.t_value = rep.t_value;
    res.accuracy = rep.max_psi;
    res.min_support_gap = rep.min_support_gap;
    res.iterations = disc.iterations;
    res.converged = disc.converged && rep.optimal( params.eps );
    res.status = res.converged ? SolveStatus::converged : SolveStatus::max_iter;
    if( !res.converged )
      res.message = disc.converged ? fmt::format( "weights on the fixed discretisation reach max_psi = {:.6e} only", rep.max_psi )
                                   : "DISC-MD did not close the LP gap within the iteration limit";
  }
  catch( std::exception const& e ){
    res.converged = false;
    res.status = SolveStatus::error;
    res.message = e.what();
    if( res.design.empty() ) res.design = initial;
  }
  return res;
}

namespace
{

double golden_section( std::function<double( double )> const& f, double lo, double hi, double tol )
{
  double const r = ( std::sqrt( 5. ) - 1. ) / 2.;
  double a = lo, b = hi;
  double c = b - r * ( b - a ), d = a + r * ( b - a );
  double fc = f( c ), fd = f( d );
  while( b - a > tol ){
    if( fc >= fd ){
      b = d;
      d = c;
      fd = fc;
      c = b - r * ( b - a );
      fc = f( c );
    }
    else{
      a = c;
      c = d;
      fc = fd;
      d = a + r * ( b - a );
      fd = f( d );
    }
  }
  return fc >= fd ? c : d;
}

} // namespace

SolveResult vdm( ModelPair const& pair, DesignSpace const& space, Design const& initial, AlgoParams const& params,
                 GlobalSearchConfig const& gcfg )
{
  params.validate();
  check_initial( pair, space, initial );
  FitConfig const fcfg = fit_config( params );

  OuterState st;
  auto& res = st.result;
  try{
    Design current = initial;
    std::optional<Vector> warm;
    res.status = SolveStatus::max_iter;
    for( int k = 0; k < params.max_iter; ++k ){
      res.iterations = k + 1;
      FitResult fit;
      {
        PhaseTimer timer( st.ls_s );
        fit = fit_parameters( pair, current, warm, fcfg );
      }
      warm = fit.theta_hat;
      DistanceMaximum best;
      {
        PhaseTimer timer( st.gs_s );
        best = maximize_distance( pair, fit.theta_hat, space, gcfg );
      }
      double const t = t_value( pair, current, fit.theta_hat );
      double const max_psi = best.value - t;
      double const gap = support_gap( pair, current, fit.theta_hat, t );
      st.record( k, t, max_psi, gap, 1, current.size() );
      spdlog::debug( "vdm {:4d}: T {:.12e}  max_psi {:.3e}  support {}", k, t, max_psi, current.size() );

      res.design = current;
      res.theta_hat = fit.theta_hat;
      res.t_value = t;
      res.accuracy = max_psi;
      res.min_support_gap = gap;
      if( gap <= params.eps && max_psi <= params.eps ){
        res.converged = true;
        res.status = SolveStatus::converged;
        break;
      }

      Design const mass = Design::point_mass( best.point );
      double alpha = 1. / ( k + 2. );
      if( params.vdm_step == VdmStep::line_search ){
        PhaseTimer timer( st.ls_s );
        auto objective = [&]( double a ){
          Design const trial = mix_designs( current, mass, a );
          try{
            return fit_parameters( pair, trial, warm, fcfg ).objective;
          }
          catch( FitError const& ){
            return -std::numeric_limits<double>::infinity();
          }
        };
        alpha = golden_section( objective, 0., 1., 1e-6 );
      }
      current = mix_designs( current, mass, alpha );
    }
    if( res.status == SolveStatus::max_iter )
      res.message = fmt::format( "maximum number of iterations ({}) reached", params.max_iter );
  }
  catch( std::exception const& e ){
    res.converged = false;
    res.status = SolveStatus::error;
    res.message = e.what();
    if( res.design.empty() ) res.design = initial;
  }
  return res;
}

} // namespace discrim
