#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "discrim/algorithms.hpp"
#include "discrim/config.hpp"
#include "discrim/models.hpp"
#include "discrim/report.hpp"

using namespace discrim;
namespace fs = std::filesystem;

namespace
{

//! @brief Collects sub-check results for one criterion
class Criterion
{
public:
  explicit Criterion( std::string name ) : name_( std::move( name ) ) {}

  void check( bool ok, std::string const& what )
  {
    ok_ = ok_ && ok;
    details_.push_back( fmt::format( "    [{}] {}", ok ? "ok" : "failed", what ) );
  }

  bool ok() const { return ok_; }

  bool report() const
  {
    fmt::print( "{} {}\n", ok_ ? "PASS" : "FAIL", name_ );
    for( auto const& d : details_ ) fmt::print( "{}\n", d );
    std::fflush( stdout );
    return ok_;
  }

private:
  std::string name_;
  bool ok_ = true;
  std::vector<std::string> details_;
};

struct CliRun
{
  int exit_code = -1;
  double seconds = 0.;
  DesignFile design;
};

fs::path scratch_dir()
{
  static fs::path const dir = [](){
    auto d = fs::temp_directory_path() / fmt::format( "discrim_acceptance_{}", ::getpid() );
    fs::remove_all( d );
    fs::create_directories( d );
    return d;
  }();
  return dir;
}

CliRun cli_solve( std::string const& config, std::string const& tag )
{
  auto const out = scratch_dir() / tag;
  auto const cmd = fmt::format( "DISCRIM_OPT_LOG=error \"{}\" solve --config \"{}\" --out \"{}\" > \"{}\" 2>&1", DISCRIM_OPT_PATH,
                                ( fs::path( DISCRIM_CONFIG_DIR ) / config ).string(), out.string(),
                                ( scratch_dir() / ( tag + ".log" ) ).string() );
  auto const t0 = std::chrono::steady_clock::now();
  int const rc = std::system( cmd.c_str() );
  CliRun run;
  run.seconds = std::chrono::duration<double>( std::chrono::steady_clock::now() - t0 ).count();
  run.exit_code = WIFEXITED( rc ) ? WEXITSTATUS( rc ) : -1;
  if( fs::exists( out / "design.json" ) ) run.design = read_design_json( out / "design.json" );
  return run;
}

std::string fmt_point( DesignPoint const& p )
{
  std::string s;
  for( double c : p.coords ) s += fmt::format( "{}{:g}", s.empty() ? "" : ",", c );
  return "(" + s + ")";
}

// index of the support point matching target within tol (max-norm), or -1
int match_point( Design const& d, DesignPoint const& target, double tol )
{
  for( std::size_t i = 0; i < d.size(); ++i ){
    double dist = 0.;
    for( std::size_t k = 0; k < target.dim(); ++k ) dist = std::max( dist, std::abs( d.point( i )[k] - target[k] ) );
    if( dist <= tol ) return static_cast<int>( i );
  }
  return -1;
}

void check_support( Criterion& c, Design const& d, std::vector<DesignPoint> const& points, Vector const& weights,
                    double point_tol, double weight_tol )
{
  c.check( d.size() == points.size(), fmt::format( "support size {} (expected {})", d.size(), points.size() ) );
  for( std::size_t k = 0; k < points.size(); ++k ){
    int const i = match_point( d, points[k], point_tol );
    if( i < 0 ){
      std::string have;
      for( auto const& p : d.points() ) have += fmt::format( " {:.17g}", p[0] );
      c.check( false, fmt::format( "no support point within {:g} of {} (first coordinates:{})", point_tol, fmt_point( points[k] ), have ) );
      continue;
    }
    auto const ui = static_cast<std::size_t>( i );
    c.check( std::abs( d.weight( ui ) - weights[k] ) <= weight_tol,
             fmt::format( "point {} weight {:.6f} vs {:.4f} (tol {:g})", fmt_point( d.point( ui ) ), d.weight( ui ), weights[k],
                          weight_tol ) );
  }
}

struct NamedRun
{
  std::string name;
  ModelPair pair;
  DesignSpace space;
  AlgoParams params;
  GlobalSearchConfig global;
  SolveResult result;
};

ModelPair toy_pair()
{
  return make_scalar_pair( []( std::span<double const> x ){ return x[0]; },
                           []( std::span<double const>, std::span<double const> t ){ return t[0]; },
                           ParameterSpace( { 0. }, { 1. } ), "linear_vs_constant" );
}

NamedRun run_config( std::string const& file, Algorithm alg )
{
  auto const cfg = load_config( fs::path( DISCRIM_CONFIG_DIR ) / file );
  NamedRun r{ fmt::format( "{} {}", file, algorithm_name( alg ) ), cfg.model_pair(), cfg.design_space, cfg.params( alg ), cfg.global, {} };
  switch( alg ){
  case Algorithm::two_adapt:
    r.result = two_adapt_md( r.pair, r.space, cfg.initial_design, cfg.theta_disc0, r.params, r.global );
    break;
  case Algorithm::disc:
    r.result = solve_disc( r.pair, r.space, cfg.initial_design, cfg.theta_disc0, r.params, r.global );
    break;
  case Algorithm::vdm:
    r.result = vdm( r.pair, r.space, cfg.initial_design, r.params, r.global );
    break;
  }
  return r;
}

NamedRun run_toy()
{
  NamedRun r{ "linear-vs-constant 2adapt", toy_pair(), DesignSpace::box( { 0. }, { 1. } ), {}, {}, {} };
  r.params.eps = 1e-7;
  r.params.eps_sip = 1e-14;
  r.result = two_adapt_md( r.pair, r.space, Design::point_mass( { 0.5 } ), {}, r.params, r.global );
  return r;
}

// 5-point lattice version of the MM problem
std::vector<double> const small_lattice = { 0.4, 1.2, 2.6, 3.8, 5.0 };

NamedRun run_small_lattice()
{
  auto const space = DesignSpace::lattice( { small_lattice } );
  NamedRun r{ "5-point MM lattice disc", models::make_mm_pair(), space, {}, {}, {} };
  r.params.eps_sip = 1e-9;
  std::vector<DesignPoint> pts;
  for( double x : small_lattice ) pts.push_back( { x } );
  r.result = solve_disc( r.pair, space, Design::uniform( pts ), {}, r.params, r.global );
  return r;
}

////////////////////////////////////////////////////////////////////////
// Maximin oracle on the 5-point lattice: max over a weight grid of the
// minimum over a 200x200 parameter grid. The objective is concave in the
// weights, so finer weight grids are searched around the best coarser
// point. The final 1e-3 stage uses a 200x200 grid zoomed around the
// parameter minimiser of the full-box grid.
////////////////////////////////////////////////////////////////////////
using WeightIndex = std::array<int, 5>;

Eigen::MatrixXd lattice_phi( ModelPair const& mm, Vector const& lo, Vector const& hi, int n_par )
{
  Eigen::MatrixXd phi( 5, n_par * n_par );
  for( int a = 0; a < n_par; ++a )
    for( int b = 0; b < n_par; ++b ){
      double const th[] = { lo[0] + ( hi[0] - lo[0] ) * a / ( n_par - 1 ), lo[1] + ( hi[1] - lo[1] ) * b / ( n_par - 1 ) };
      for( int i = 0; i < 5; ++i ) phi( i, a * n_par + b ) = squared_distance( mm, { small_lattice[static_cast<std::size_t>( i )] }, th );
    }
  return phi;
}

// all weight vectors with w_i = k_i / res, |k_i - center_i| <= radius, sum k_i = res
double weight_search( Eigen::MatrixXd const& phi, int res, WeightIndex const& center, int radius, WeightIndex& best_k )
{
  std::vector<WeightIndex> ks;
  WeightIndex k{};
  std::function<void( std::size_t, int )> rec = [&]( std::size_t i, int left ){
    int const lo = std::max( 0, center[i] - radius );
    int const hi = std::min( left, center[i] + radius );
    if( i == 4 ){
      if( left < lo || left > hi ) return;
      k[4] = left;
      ks.push_back( k );
      return;
    }
    for( int v = lo; v <= hi; ++v ){
      k[i] = v;
      rec( i + 1, left - v );
    }
  };
  rec( 0, res );
  double best = -1.;
  std::size_t const chunk = 2048;
  for( std::size_t s = 0; s < ks.size(); s += chunk ){
    std::size_t const e = std::min( ks.size(), s + chunk );
    Eigen::MatrixXd W( static_cast<Eigen::Index>( e - s ), 5 );
    for( std::size_t r = s; r < e; ++r )
      for( std::size_t j = 0; j < 5; ++j ) W( static_cast<Eigen::Index>( r - s ), static_cast<Eigen::Index>( j ) ) = static_cast<double>( ks[r][j] ) / res;
    Eigen::VectorXd const mins = ( W * phi ).rowwise().minCoeff();
    for( Eigen::Index r = 0; r < mins.size(); ++r )
      if( mins[r] > best ){
        best = mins[r];
        best_k = ks[s + static_cast<std::size_t>( r )];
      }
  }
  return best;
}

double lattice_oracle()
{
  int const n_par = 200;
  auto const mm = models::make_mm_pair();
  auto const& ps = mm.parameter_space;
  Eigen::MatrixXd const full = lattice_phi( mm, ps.lower, ps.upper, n_par );

  WeightIndex k20{}, k100{}, k1000{};
  weight_search( full, 20, { 10, 10, 10, 10, 10 }, 20, k20 );
  WeightIndex c100{};
  for( std::size_t i = 0; i < 5; ++i ) c100[i] = 5 * k20[i];
  weight_search( full, 100, c100, 5, k100 );

  Eigen::Matrix<double, 1, 5> w;
  for( std::size_t i = 0; i < 5; ++i ) w[static_cast<Eigen::Index>( i )] = k100[i] / 100.;
  Eigen::Index arg = 0;
  ( w * full ).minCoeff( &arg );
  Vector lo( 2 ), hi( 2 );
  Eigen::Index const idx[] = { arg / n_par, arg % n_par };
  for( std::size_t j = 0; j < 2; ++j ){
    double const h = ( ps.upper[j] - ps.lower[j] ) / ( n_par - 1 );
    double const c = ps.lower[j] + h * static_cast<double>( idx[j] );
    lo[j] = std::max( ps.lower[j], c - 2. * h );
    hi[j] = std::min( ps.upper[j], c + 2. * h );
  }
  Eigen::MatrixXd const zoom = lattice_phi( mm, lo, hi, n_par );

  WeightIndex c1000{};
  for( std::size_t i = 0; i < 5; ++i ) c1000[i] = 10 * k100[i];
  return weight_search( zoom, 1000, c1000, 10, k1000 );
}

Design perturb( Design const& d )
{
  std::size_t hi = 0;
  for( std::size_t i = 1; i < d.size(); ++i )
    if( d.weight( i ) > d.weight( hi ) ) hi = i;
  Vector w = d.weights();
  std::vector<DesignPoint> pts = d.points();
  std::size_t other = hi == 0 ? 1 : 0;
  if( d.size() < 2 ){
    pts.push_back( pts[0] );
    w.push_back( 0. );
    other = 1;
  }
  double const delta = std::min( 0.05, w[hi] );
  w[hi] -= delta;
  w[other] += delta;
  return Design( pts, w );
}

} // namespace

int main()
{
  spdlog::set_level( spdlog::level::err );
  bool all = true;

  // MM reproduction through the command line
  {
    Criterion c( "MM 2-ADAPT-MD reproduction (mm.config)" );
    auto const run = cli_solve( "mm.config", "mm" );
    auto const& f = run.design;
    c.check( run.exit_code == 0 && f.converged, fmt::format( "exit code {}, converged {}", run.exit_code, f.converged ) );
    c.check( std::abs( f.t_value - 1.1854e-3 ) <= 2e-5, fmt::format( "T = {:.10g} vs 1.1854e-3 (tol 2e-5)", f.t_value ) );
    if( !f.design.empty() )
      check_support( c, f.design, { { 0.386 }, { 2.596 }, { 5. } }, { 0.3906, 0.3896, 0.2198 }, 0.02, 0.01 );
    c.check( f.accuracy <= 1e-5, fmt::format( "accuracy {:.3e} <= 1e-5", f.accuracy ) );
    c.check( run.seconds <= 60., fmt::format( "runtime {:.2f} s <= 60 s", run.seconds ) );
    all = c.report() && all;
  }

  std::vector<NamedRun> runs;

  // VDM
  {
    Criterion c( "VDM on mm.config" );
    runs.push_back( run_config( "mm.config", Algorithm::vdm ) );
    auto const& r = runs.back().result;
    c.check( r.converged, fmt::format( "status {} after {} iterations", to_string( r.status ), r.iterations ) );
    c.check( r.iterations <= 1000, fmt::format( "iterations {} <= 1000", r.iterations ) );
    c.check( r.accuracy <= 1e-5, fmt::format( "accuracy {:.3e} <= 1e-5", r.accuracy ) );
    c.check( r.t_value >= 1.175e-3, fmt::format( "T = {:.10g} >= 1.175e-3", r.t_value ) );
    all = c.report() && all;
  }

  // kinetics through the command line
  {
    Criterion c( "Kinetics 2-ADAPT-MD reproduction (kinetics.config)" );
    auto const run = cli_solve( "kinetics.config", "kinetics" );
    auto const& f = run.design;
    c.check( run.exit_code == 0 && f.converged, fmt::format( "exit code {}, converged {}", run.exit_code, f.converged ) );
    c.check( std::abs( f.t_value - 1.9322e-3 ) <= 2e-5, fmt::format( "T = {:.10g} vs 1.9322e-3 (tol 2e-5)", f.t_value ) );
    if( !f.design.empty() )
      check_support( c, prune_design( f.design, 1e-3 ), { { 0.5, 0.1, 0., 2. }, { 0.9, 0.3, 0.3, 10. }, { 0.5, 0.1, 0., 10. } },
                     { 0.5562, 0.4116, 0.0322 }, 1e-12, 0.01 );
    c.check( f.accuracy <= 1e-5, fmt::format( "accuracy {:.3e} <= 1e-5", f.accuracy ) );
    c.check( run.seconds <= 1800., fmt::format( "runtime {:.2f} s <= 1800 s", run.seconds ) );
    all = c.report() && all;
  }

  // analytic oracle
  {
    Criterion c( "Linear-vs-constant analytic oracle" );
    runs.push_back( run_toy() );
    auto const& r = runs.back().result;
    c.check( r.converged, fmt::format( "status {}", to_string( r.status ) ) );
    check_support( c, r.design, { { 0. }, { 1. } }, { 0.5, 0.5 }, 1e-12, 1e-6 );
    c.check( std::abs( r.t_value - 0.25 ) <= 1e-8, fmt::format( "T = {:.12g} vs 0.25 (tol 1e-8)", r.t_value ) );
    c.check( !r.theta_hat.empty() && std::abs( r.theta_hat[0] - 0.5 ) <= 1e-7,
             fmt::format( "theta_hat = {:.12g} vs 0.5 (tol 1e-7)", r.theta_hat.empty() ? NAN : r.theta_hat[0] ) );
    all = c.report() && all;
  }

  runs.push_back( run_config( "mm.config", Algorithm::two_adapt ) );
  runs.push_back( run_config( "kinetics.config", Algorithm::two_adapt ) );
  runs.push_back( run_small_lattice() );

  // equivalence theorem
  {
    Criterion c( "Equivalence-theorem property suite" );
    for( auto const& run : runs ){
      auto const& r = run.result;
      if( !r.converged ){
        c.check( run.name.find( "disc" ) != std::string::npos, fmt::format( "{}: not converged ({})", run.name, to_string( r.status ) ) );
        continue;
      }
      auto const eps = run.params.eps;
      auto const rep = check_optimality( run.pair, r.design, r.theta_hat, run.space, run.global );
      c.check( rep.max_psi <= eps && rep.min_support_gap <= eps,
               fmt::format( "{}: max_psi {:.3e}, min_support_gap {:.3e} (eps {:g})", run.name, rep.max_psi, rep.min_support_gap, eps ) );

      auto const bad = perturb( r.design );
      FitConfig fcfg;
      fcfg.lambda = 0.;
      auto const fit = fit_parameters( run.pair, bad, r.theta_hat, fcfg );
      auto const prep = check_optimality( run.pair, bad, fit.theta_hat, run.space, run.global );
      c.check( prep.max_psi > 10. * eps, fmt::format( "{} perturbed by 0.05: max_psi {:.3e} > {:g}", run.name, prep.max_psi, 10. * eps ) );
    }
    all = c.report() && all;
  }

  // monotonicity
  {
    Criterion c( "Monotonicity suite" );
    for( auto const& run : runs ){
      double worst_lp = -std::numeric_limits<double>::infinity(), worst_outer = -std::numeric_limits<double>::infinity();
      int n_inner = 0, n_outer = 0;
      IterationRecord const* prev_inner = nullptr;
      IterationRecord const* prev_outer = nullptr;
      for( auto const& rec : run.result.history ){
        if( rec.kind == IterationRecord::Kind::inner ){
          if( prev_inner && prev_inner->iteration == rec.iteration && rec.inner_iteration > prev_inner->inner_iteration ){
            worst_lp = std::max( worst_lp, rec.t_lp - prev_inner->t_lp );
            ++n_inner;
          }
          prev_inner = &rec;
        }
        else if( run.name.find( "2adapt" ) != std::string::npos ){
          if( prev_outer ){
            worst_outer = std::max( worst_outer, prev_outer->t_value - rec.t_value );
            ++n_outer;
          }
          prev_outer = &rec;
        }
      }
      if( n_inner > 0 )
        c.check( worst_lp <= 1e-10, fmt::format( "{}: largest t_LP increase {:.3e} over {} DISC-MD steps (tol 1e-10)", run.name, worst_lp, n_inner ) );
      if( n_outer > 0 )
        c.check( worst_outer <= run.params.eps_sip,
                 fmt::format( "{}: largest outer T decrease {:.3e} over {} steps (tol {:g})", run.name, worst_outer, n_outer, run.params.eps_sip ) );
    }
    all = c.report() && all;
  }

  // small lattice against the brute-force maximin oracle
  {
    Criterion c( "Small-lattice brute-force equivalence" );
    auto const& r = runs.back().result;
    double const oracle = lattice_oracle();
    double const rel = std::abs( r.t_value - oracle ) / oracle;
    c.check( r.status != SolveStatus::error, fmt::format( "status {}", to_string( r.status ) ) );
    c.check( rel <= 2e-3, fmt::format( "DISC-MD T {:.10g} vs oracle {:.10g}: relative difference {:.3e} (tol 2e-3)", r.t_value, oracle, rel ) );
    all = c.report() && all;
  }

  // multi-response reduction
  {
    Criterion c( "Multi-response consistency" );
    auto const scalar = models::make_mm_pair();
    ModelPair vec;
    vec.response_dim = 1;
    vec.parameter_space = scalar.parameter_space;
    vec.reference = []( std::span<double const> x, std::span<double> out ){ out[0] = models::modmm_eval( x[0], 1., 1., 0.1 ); };
    vec.alternative = []( std::span<double const> x, std::span<double const> t, std::span<double> out ){
      out[0] = models::mm_eval( x[0], t[0], t[1] );
    };
    Design const d( { { 0.386 }, { 2.596 }, { 5. } }, { 0.3906, 0.3896, 0.2198 } );
    double const th[] = { 1.86, 2.15 };
    bool same_t = t_value( vec, d, th ) == t_value( scalar, d, th );
    bool same_psi = true;
    for( int k = 0; k <= 500; ++k ){
      DesignPoint const x{ 1e-3 + ( 5. - 1e-3 ) * k / 500. };
      same_psi = same_psi && directional_derivative( vec, d, th, x ) == directional_derivative( scalar, d, th, x );
    }
    c.check( same_t, "T identical on a fixed design" );
    c.check( same_psi, "psi identical on 501 points" );
    auto const space = DesignSpace::box( { 1e-3 }, { 5. } );
    auto const initial = Design::uniform( { { 1. }, { 2. }, { 3. }, { 4. } } );
    auto const a = two_adapt_md( vec, space, initial, {}, AlgoParams{} );
    auto const b = two_adapt_md( scalar, space, initial, {}, AlgoParams{} );
    c.check( a.t_value == b.t_value && a.design.weights() == b.design.weights(),
             fmt::format( "2-ADAPT-MD T {:.17g} vs {:.17g}", a.t_value, b.t_value ) );
    all = c.report() && all;
  }

  // integrator
  {
    Criterion c( "Integrator checks" );
    double worst = 0.;
    models::KineticsParams const chain{ 0.7, 0.2, 0., 1., 1., 1. };
    for( double a0 : { 0.5, 0.7, 0.9 } )
      for( double b0 : { 0.1, 0.3 } )
        for( double t : { 2., 4., 6., 8., 10. } ){
          auto const y = models::integrate_kinetics( chain, { a0, b0, 0.15, t } );
          double const a = a0 * std::exp( -chain.k1 * t );
          double const b = b0 * std::exp( -chain.k2 * t ) + a0 * chain.k1 / ( chain.k2 - chain.k1 ) * ( std::exp( -chain.k1 * t ) - std::exp( -chain.k2 * t ) );
          double const cc = a0 + b0 + 0.15 - a - b;
          worst = std::max( { worst, std::abs( y[0] - a ), std::abs( y[1] - b ), std::abs( y[2] - cc ) } );
        }
    c.check( worst <= 1e-7, fmt::format( "linear chain max error {:.3e} (tol 1e-7)", worst ) );

    double mass = 0.;
    auto const lattice = DesignSpace::lattice( { { 0.5, 0.7, 0.9 }, { 0.1, 0.2, 0.3 }, { 0., 0.15, 0.3 }, { 2., 4., 6., 8., 10. } } );
    for( auto const& x : lattice.enumerate() ){
      auto const y = models::integrate_kinetics( {}, { x[0], x[1], x[2], x[3] } );
      mass = std::max( mass, std::abs( y[0] + y[1] + y[2] - x[0] - x[1] - x[2] ) );
    }
    c.check( mass <= 1e-8, fmt::format( "mass conservation max error {:.3e} over {} lattice points (tol 1e-8)", mass, lattice.lattice_size() ) );
    all = c.report() && all;
  }

  fmt::print( "{}\n", all ? "ALL ACCEPTANCE CRITERIA PASSED" : "SOME ACCEPTANCE CRITERIA FAILED" );
  fs::remove_all( scratch_dir() );
  return all ? 0 : 1;
}
