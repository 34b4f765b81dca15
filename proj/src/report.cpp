#include "discrim/report.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace discrim
{

using nlohmann::json;

namespace
{

std::ofstream open_out( std::filesystem::path const& path )
{
  if( path.has_parent_path() ) std::filesystem::create_directories( path.parent_path() );
  std::ofstream out( path );
  if( !out ) throw std::runtime_error( fmt::format( "cannot write '{}'", path.string() ) );
  return out;
}

json number_or_null( double v )
{
  return std::isfinite( v ) ? json( v ) : json( nullptr );
}

} // namespace

std::string format_number( double v )
{
  if( std::isnan( v ) ) return "nan";
  if( std::isinf( v ) ) return v > 0 ? "inf" : "-inf";
  return fmt::format( "{:.17g}", v );
}

void write_design_json( std::filesystem::path const& path, SolveResult const& result, std::string const& algorithm,
                        double runtime_seconds )
{
  json j;
  j["algorithm"] = algorithm;
  json support = json::array();
  for( auto const& p : result.design.points() ) support.push_back( p.coords );
  j["support"] = support;
  j["weights"] = result.design.weights();
  j["theta_hat"] = result.theta_hat;
  j["t_value"] = number_or_null( result.t_value );
  j["accuracy"] = number_or_null( result.accuracy );
  j["min_support_gap"] = number_or_null( result.min_support_gap );
  j["iterations"] = result.iterations;
  j["runtime_seconds"] = runtime_seconds;
  j["converged"] = result.converged;
  j["status"] = to_string( result.status );
  if( !result.message.empty() ) j["message"] = result.message;
  auto out = open_out( path );
  out << j.dump( 2 ) << '\n';
}

DesignFile read_design_json( std::filesystem::path const& path )
{
  std::ifstream in( path );
  if( !in ) throw std::runtime_error( fmt::format( "cannot open design file '{}'", path.string() ) );
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try{
    j = json::parse( ss.str() );
  }
  catch( json::parse_error const& e ){
    throw std::runtime_error( fmt::format( "{}: {}", path.string(), e.what() ) );
  }
  DesignFile f;
  try{
    std::vector<DesignPoint> pts;
    for( auto const& row : j.at( "support" ) ) pts.emplace_back( row.get<Vector>() );
    f.design = Design( std::move( pts ), j.at( "weights" ).get<Vector>() );
    if( j.contains( "theta_hat" ) ) f.theta_hat = j.at( "theta_hat" ).get<Vector>();
    auto num = [&]( char const* k ){ return j.contains( k ) && j.at( k ).is_number() ? j.at( k ).get<double>() : 0.; };
    f.t_value = num( "t_value" );
    f.accuracy = num( "accuracy" );
    f.runtime_seconds = num( "runtime_seconds" );
    f.iterations = j.value( "iterations", 0 );
    f.converged = j.value( "converged", false );
    f.algorithm = j.value( "algorithm", std::string() );
  }
  catch( json::exception const& e ){
    throw std::runtime_error( fmt::format( "{}: malformed design file: {}", path.string(), e.what() ) );
  }
  return f;
}

void write_history_csv( std::filesystem::path const& path, std::vector<IterationRecord> const& history )
{
  auto out = open_out( path );
  out << "kind,iteration,inner_iteration,t_value,t_lp,accuracy,min_support_gap,n_theta,n_candidates,"
         "wall_seconds,lp_seconds,ls_seconds,global_seconds\n";
  for( auto const& r : history ){
    out << ( r.kind == IterationRecord::Kind::outer ? "outer" : "inner" ) << ',' << r.iteration << ','
        << r.inner_iteration << ',' << format_number( r.t_value ) << ',' << format_number( r.t_lp ) << ','
        << format_number( r.accuracy ) << ',' << format_number( r.min_support_gap ) << ',' << r.n_theta << ','
        << r.n_candidates << ',' << format_number( r.wall_seconds ) << ',' << format_number( r.lp_seconds ) << ','
        << format_number( r.ls_seconds ) << ',' << format_number( r.global_seconds ) << '\n';
  }
}

void write_psi_curve( std::filesystem::path const& path, ModelPair const& pair, Design const& design,
                      std::span<double const> theta_hat, BoxSpace const& box, int psi_grid )
{
  if( box.lower.size() != 1 ) throw InvalidArgument( "psi curve needs a one-dimensional box" );
  if( psi_grid < 2 ) throw InvalidArgument( "psi_grid must be at least 2" );
  double const t = t_value( pair, design, theta_hat );
  auto out = open_out( path );
  out << "x,psi\n";
  for( int k = 0; k < psi_grid; ++k ){
    double const x = k == psi_grid - 1 ? box.upper[0]
                                       : box.lower[0] + ( box.upper[0] - box.lower[0] ) * k / ( psi_grid - 1. );
    out << format_number( x ) << ',' << format_number( squared_distance( pair, DesignPoint{ x }, theta_hat ) - t ) << '\n';
  }
}

void write_comparison_csv( std::filesystem::path const& path, std::vector<ComparisonRow> const& rows )
{
  auto out = open_out( path );
  out << "algorithm,reached_accuracy,t_value,runtime_seconds,iterations,support_size\n";
  for( auto const& r : rows )
    out << r.algorithm << ',' << format_number( r.reached_accuracy ) << ',' << format_number( r.t_value ) << ','
        << format_number( r.runtime_seconds ) << ',' << r.iterations << ',' << r.support_size << '\n';
}

} // namespace discrim
