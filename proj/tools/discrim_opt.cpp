#include <chrono>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "discrim/algorithms.hpp"
#include "discrim/config.hpp"
#include "discrim/parallel.hpp"
#include "discrim/report.hpp"

using namespace discrim;

namespace
{

void setup_logging()
{
  auto logger = spdlog::stderr_color_mt( "discrim" );
  spdlog::set_default_logger( logger );
  spdlog::set_pattern( "[%l] %v" );
  spdlog::set_level( spdlog::level::info );
  if( char const* env = std::getenv( "DISCRIM_OPT_LOG" ) ){
    std::string const v = env;
    if( v == "error" ) spdlog::set_level( spdlog::level::err );
    else if( v == "info" ) spdlog::set_level( spdlog::level::info );
    else if( v == "debug" ) spdlog::set_level( spdlog::level::debug );
    else spdlog::warn( "ignoring DISCRIM_OPT_LOG={} (expected error, info or debug)", v );
  }
}

struct Run
{
  SolveResult result;
  double seconds = 0.;
};

Run run_algorithm( ProblemConfig const& cfg, ModelPair const& pair, Algorithm alg )
{
  auto const params = cfg.params( alg );
  auto const t0 = std::chrono::steady_clock::now();
  Run run;
  switch( alg ){
  case Algorithm::two_adapt:
    run.result = two_adapt_md( pair, cfg.design_space, cfg.initial_design, cfg.theta_disc0, params, cfg.global );
    break;
  case Algorithm::disc:
    run.result = solve_disc( pair, cfg.design_space, cfg.initial_design, cfg.theta_disc0, params, cfg.global );
    break;
  case Algorithm::vdm:
    run.result = vdm( pair, cfg.design_space, cfg.initial_design, params, cfg.global );
    break;
  }
  run.seconds = std::chrono::duration<double>( std::chrono::steady_clock::now() - t0 ).count();
  return run;
}

void print_summary( std::string const& alg, Run const& run )
{
  auto const& r = run.result;
  fmt::print( "algorithm   {}\nstatus      {}\nT           {}\naccuracy    {}\niterations  {}\nruntime     {:.3f} s\n", alg,
              to_string( r.status ), format_number( r.t_value ), format_number( r.accuracy ), r.iterations, run.seconds );
  fmt::print( "support     weight\n" );
  for( std::size_t i = 0; i < r.design.size(); ++i ){
    std::string coords;
    for( double c : r.design.point( i ).coords ) coords += fmt::format( "{}{:.12g}", coords.empty() ? "" : ", ", c );
    fmt::print( "  ({})  {:.12g}\n", coords, r.design.weight( i ) );
  }
  if( !r.message.empty() ) fmt::print( "note        {}\n", r.message );
}

int exit_code( SolveStatus s )
{
  switch( s ){
  case SolveStatus::converged: return 0;
  case SolveStatus::max_iter:
  case SolveStatus::stalled: return 2;
  case SolveStatus::error: return 1;
  }
  return 1;
}

int cmd_solve( std::string const& config_path, std::string const& algorithm, std::string const& out_dir )
{
  auto cfg = load_config( config_path );
  auto const alg = algorithm.empty() ? cfg.algorithm : parse_algorithm( algorithm );
  std::filesystem::path const out = out_dir.empty() ? cfg.output_directory : std::filesystem::path( out_dir );
  auto const pair = cfg.model_pair();

  auto run = run_algorithm( cfg, pair, alg );
  auto const& r = run.result;
  write_history_csv( out / "history.csv", r.history );
  write_design_json( out / "design.json", r, algorithm_name( alg ), run.seconds );
  if( cfg.emit_psi_curve && cfg.design_space.is_box() && cfg.design_space.dim() == 1 && !r.theta_hat.empty() )
    write_psi_curve( out / "psi_curve.csv", pair, r.design, r.theta_hat, cfg.design_space.as_box(), cfg.psi_grid );
  else if( cfg.emit_psi_curve ) spdlog::warn( "psi curve is only written for one-dimensional boxes" );

  print_summary( algorithm_name( alg ), run );
  if( r.status == SolveStatus::error ) spdlog::error( "{}", r.message );
  return exit_code( r.status );
}

int cmd_verify( std::string const& design_path, std::string const& config_path )
{
  auto cfg = load_config( config_path );
  auto const file = read_design_json( design_path );
  auto const pair = cfg.model_pair();
  if( file.design.dim() != cfg.design_space.dim() )
    throw InvalidArgument( fmt::format( "design has dimension {}, the config's design space has {}", file.design.dim(),
                                        cfg.design_space.dim() ) );
  for( std::size_t i = 0; i < file.design.size(); ++i )
    if( !cfg.design_space.contains( file.design.point( i ) ) )
      throw InvalidArgument( fmt::format( "design point {} lies outside the design space", i ) );
  if( !file.theta_hat.empty() && file.theta_hat.size() != pair.parameter_space.dim() )
    throw InvalidArgument( "theta_hat in the design file does not match the model's parameter dimension" );

  auto const params = cfg.params( cfg.algorithm );
  FitConfig fc;
  fc.n_starts = params.n_theta_starts;
  fc.lambda = 0.;
  std::optional<Vector> warm;
  if( !file.theta_hat.empty() ) warm = pair.parameter_space.clamp( file.theta_hat );
  auto const fit = fit_parameters( pair, file.design, warm, fc );
  auto const rep = check_optimality( pair, file.design, fit.theta_hat, cfg.design_space, cfg.global );
  bool const ok = rep.optimal( params.eps );

  std::string worst;
  for( double c : rep.worst_point.coords ) worst += fmt::format( "{}{:.12g}", worst.empty() ? "" : ", ", c );
  fmt::print( "T                {}\nmax_psi          {}\nmin_support_gap  {}\nworst_point      ({})\n", format_number( rep.t_value ),
              format_number( rep.max_psi ), format_number( rep.min_support_gap ), worst );
  fmt::print( "eps-T-optimal    {} (eps = {:g})\n", ok ? "yes" : "no", params.eps );
  return ok ? 0 : 1;
}

int cmd_compare( std::string const& config_path, std::vector<std::string> const& algorithms, std::string const& out_dir )
{
  if( algorithms.empty() ) throw InvalidArgument( "compare needs at least one algorithm" );
  std::vector<Algorithm> algs;
  for( auto const& a : algorithms ) algs.push_back( parse_algorithm( a ) );
  auto cfg = load_config( config_path );
  std::filesystem::path const out = out_dir.empty() ? cfg.output_directory : std::filesystem::path( out_dir );
  auto const pair = cfg.model_pair();

  std::vector<ComparisonRow> rows;
  bool failed = false;
  for( auto alg : algs ){
    auto const name = algorithm_name( alg );
    auto run = run_algorithm( cfg, pair, alg );
    auto const& r = run.result;
    write_history_csv( out / name / "history.csv", r.history );
    write_design_json( out / name / "design.json", r, name, run.seconds );
    rows.push_back( { name, r.accuracy, r.t_value, run.seconds, r.iterations, r.design.support_size() } );
    if( r.status == SolveStatus::error ){
      failed = true;
      spdlog::error( "{}: {}", name, r.message );
    }
    fmt::print( "{:8s} status {:10s} T {}  accuracy {}  {:.3f} s  {} iterations  support {}\n", name, to_string( r.status ),
                format_number( r.t_value ), format_number( r.accuracy ), run.seconds, r.iterations, r.design.support_size() );
  }
  write_comparison_csv( out / "comparison.csv", rows );
  return failed ? 1 : 0;
}

} // namespace

int main( int argc, char** argv )
{
  setup_logging();
  CLI::App app{ "T-optimal experimental design for model discrimination" };
  app.require_subcommand( 1 );
  unsigned threads = 0;
  app.add_option( "--threads", threads, "worker threads (0 = all cores)" );

  std::string config, algorithm, out, design;
  std::vector<std::string> algorithms;

  auto* solve = app.add_subcommand( "solve", "compute a T-optimal design" );
  solve->add_option( "--config", config, "problem config file" )->required();
  solve->add_option( "--algorithm", algorithm, "2adapt, disc or vdm (default: the config's)" );
  solve->add_option( "--out", out, "output directory (default: the config's)" );
  solve->add_option( "--threads", threads, "worker threads (0 = all cores)" );

  auto* verify = app.add_subcommand( "verify", "check a design for eps-T-optimality" );
  verify->add_option( "--design", design, "design.json" )->required();
  verify->add_option( "--config", config, "problem config file" )->required();
  verify->add_option( "--threads", threads, "worker threads (0 = all cores)" );

  auto* compare = app.add_subcommand( "compare", "run several algorithms on one problem" );
  compare->add_option( "--config", config, "problem config file" )->required();
  compare->add_option( "--algorithms", algorithms, "comma-separated list" )->delimiter( ',' )->required();
  compare->add_option( "--out", out, "output directory (default: the config's)" );
  compare->add_option( "--threads", threads, "worker threads (0 = all cores)" );

  CLI11_PARSE( app, argc, argv );
  set_thread_count( threads );

  try{
    if( *solve ) return cmd_solve( config, algorithm, out );
    if( *verify ) return cmd_verify( design, config );
    if( *compare ) return cmd_compare( config, algorithms, out );
  }
  catch( std::exception const& e ){
    spdlog::error( "{}", e.what() );
    return 1;
  }
  return 1;
}
