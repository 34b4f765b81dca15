#include "discrim/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace discrim
{

using nlohmann::json;

namespace
{

std::pair<std::size_t, std::size_t> line_col( std::string const& text, std::size_t byte )
{
  std::size_t line = 1, col = 1;
  for( std::size_t i = 0; i < byte && i < text.size(); ++i ){
    if( text[i] == '\n' ){
      ++line;
      col = 1;
    }
    else ++col;
  }
  return { line, col };
}

// walks a JSON tree and reports errors with the dotted path of the field
class Reader
{
public:
  Reader( json const& j, std::string path ) : j_( j ), path_( std::move( path ) ) {}

  [[noreturn]] void fail( std::string const& what ) const
  {
    throw ConfigError( fmt::format( "{}: {}", path_.empty() ? "<root>" : path_, what ) );
  }

  bool has( char const* key ) const { return j_.is_object() && j_.contains( key ); }

  Reader at( char const* key ) const
  {
    if( !j_.is_object() ) fail( "expected an object" );
    if( !j_.contains( key ) ) Reader( j_, sub( key ) ).fail( "missing required field" );
    return Reader( j_.at( key ), sub( key ) );
  }

  Reader index( std::size_t i ) const { return Reader( j_.at( i ), fmt::format( "{}[{}]", path_, i ) ); }

  double number() const
  {
    if( !j_.is_number() ) fail( "expected a number" );
    return j_.get<double>();
  }
  int integer() const
  {
    if( !j_.is_number_integer() ) fail( "expected an integer" );
    return j_.get<int>();
  }
  bool boolean() const
  {
    if( !j_.is_boolean() ) fail( "expected true or false" );
    return j_.get<bool>();
  }
  std::string string() const
  {
    if( !j_.is_string() ) fail( "expected a string" );
    return j_.get<std::string>();
  }
  std::size_t size() const
  {
    if( !j_.is_array() ) fail( "expected an array" );
    return j_.size();
  }
  Vector numbers() const
  {
    Vector out;
    for( std::size_t i = 0; i < size(); ++i ) out.push_back( index( i ).number() );
    return out;
  }
  std::vector<Vector> number_rows() const
  {
    std::vector<Vector> out;
    for( std::size_t i = 0; i < size(); ++i ) out.push_back( index( i ).numbers() );
    return out;
  }
  json const& raw() const { return j_; }
  std::string const& path() const { return path_; }

  //! rejects keys outside the allowed list
  void only( std::initializer_list<char const*> keys ) const
  {
    if( !j_.is_object() ) fail( "expected an object" );
    for( auto const& [k, v] : j_.items() ){
      bool ok = false;
      for( auto const* a : keys ) ok = ok || k == a;
      if( !ok ) Reader( v, sub( k.c_str() ) ).fail( "unknown field" );
    }
  }

private:
  std::string sub( char const* key ) const { return path_.empty() ? key : path_ + "." + key; }
  json const& j_;
  std::string path_;
};

template <class F>
auto field( Reader const& r, F&& f ) -> decltype( f() )
{
  try{
    return f();
  }
  catch( InvalidArgument const& e ){
    r.fail( e.what() );
  }
}

} // namespace

Algorithm parse_algorithm( std::string const& name )
{
  if( name == "2adapt" ) return Algorithm::two_adapt;
  if( name == "disc" ) return Algorithm::disc;
  if( name == "vdm" ) return Algorithm::vdm;
  throw ConfigError( fmt::format( "unknown algorithm '{}' (expected 2adapt, disc or vdm)", name ) );
}

std::string algorithm_name( Algorithm a )
{
  switch( a ){
  case Algorithm::two_adapt: return "2adapt";
  case Algorithm::disc: return "disc";
  case Algorithm::vdm: return "vdm";
  }
  return "unknown";
}

ModelPair ProblemConfig::model_pair() const
{
  auto pair = models::registry_lookup( model_name, reference_params );
  if( parameter_space ) pair.parameter_space = *parameter_space;
  return pair;
}

AlgoParams ProblemConfig::params( Algorithm a ) const
{
  AlgoParams p = a == Algorithm::vdm ? AlgoParams::vdm_defaults() : AlgoParams{};
  if( eps ) p.eps = *eps;
  if( a == Algorithm::vdm ){
    if( vdm_max_iter ) p.max_iter = *vdm_max_iter;
    if( vdm_lambda ) p.lambda = *vdm_lambda;
  }
  else{
    if( max_iter ) p.max_iter = *max_iter;
    if( lambda ) p.lambda = *lambda;
  }
  if( n_theta_starts ) p.n_theta_starts = *n_theta_starts;
  if( eps_sip ) p.eps_sip = *eps_sip;
  if( max_iter_sip ) p.max_iter_sip = *max_iter_sip;
  if( max_sip_tightenings ) p.max_sip_tightenings = *max_sip_tightenings;
  if( lp_method ) p.lp_method = *lp_method;
  if( vdm_step ) p.vdm_step = *vdm_step;
  return p;
}

ProblemConfig parse_config( std::string const& text, std::string const& source )
{
  json root;
  try{
    root = json::parse( text, nullptr, true, true );
  }
  catch( json::parse_error const& e ){
    auto [line, col] = line_col( text, e.byte > 0 ? e.byte - 1 : 0 );
    throw ConfigError( fmt::format( "{}:{}:{}: syntax error: {}", source, line, col, e.what() ) );
  }

  ProblemConfig cfg;
  Reader const r( root, "" );
  r.only( { "model", "design_space", "initial_design", "algorithm", "output" } );

  auto const model = r.at( "model" );
  model.only( { "name", "reference_params", "parameter_space" } );
  cfg.model_name = model.at( "name" ).string();
  if( model.has( "reference_params" ) ){
    auto const rp = model.at( "reference_params" );
    if( !rp.raw().is_object() ) rp.fail( "expected an object" );
    for( auto const& [k, v] : rp.raw().items() ) cfg.reference_params[k] = rp.at( k.c_str() ).number();
  }
  if( model.has( "parameter_space" ) ){
    auto const ps = model.at( "parameter_space" );
    ps.only( { "lower", "upper" } );
    cfg.parameter_space = field( ps, [&]{ return ParameterSpace( ps.at( "lower" ).numbers(), ps.at( "upper" ).numbers() ); } );
  }
  ModelPair const pair = field( model, [&]{ return cfg.model_pair(); } );

  auto const ds = r.at( "design_space" );
  auto const type = ds.at( "type" ).string();
  if( type == "box" ){
    ds.only( { "type", "lower", "upper" } );
    cfg.design_space = field( ds, [&]{ return DesignSpace::box( ds.at( "lower" ).numbers(), ds.at( "upper" ).numbers() ); } );
  }
  else if( type == "lattice" ){
    ds.only( { "type", "levels" } );
    cfg.design_space = field( ds, [&]{ return DesignSpace::lattice( ds.at( "levels" ).number_rows() ); } );
  }
  else ds.at( "type" ).fail( fmt::format( "unknown design space type '{}' (expected box or lattice)", type ) );

  auto const init = r.at( "initial_design" );
  init.only( { "points", "weights" } );
  auto const pts_r = init.at( "points" );
  std::vector<DesignPoint> pts;
  for( auto const& row : pts_r.number_rows() ) pts.emplace_back( row );
  Vector weights;
  if( init.has( "weights" ) ) weights = init.at( "weights" ).numbers();
  cfg.initial_design = field( init.has( "weights" ) ? init.at( "weights" ) : init, [&]{
    return init.has( "weights" ) ? Design( pts, weights ) : Design::uniform( pts );
  } );
  for( std::size_t i = 0; i < cfg.initial_design.size(); ++i ){
    if( cfg.initial_design.point( i ).dim() != cfg.design_space.dim() )
      pts_r.index( i ).fail( fmt::format( "expected {} coordinates", cfg.design_space.dim() ) );
    if( !cfg.design_space.contains( cfg.initial_design.point( i ) ) ) pts_r.index( i ).fail( "point lies outside the design space" );
  }

  if( r.has( "algorithm" ) ){
    auto const a = r.at( "algorithm" );
    a.only( { "name", "eps", "max_iter", "n_theta_starts", "lambda", "eps_sip", "max_iter_sip", "max_sip_tightenings",
              "lp_method", "vdm_step", "vdm_max_iter", "vdm_lambda", "theta_disc0", "global_search" } );
    if( a.has( "name" ) ) cfg.algorithm = field( a.at( "name" ), [&]{ return parse_algorithm( a.at( "name" ).string() ); } );
    if( a.has( "eps" ) ) cfg.eps = a.at( "eps" ).number();
    if( a.has( "max_iter" ) ) cfg.max_iter = a.at( "max_iter" ).integer();
    if( a.has( "n_theta_starts" ) ) cfg.n_theta_starts = a.at( "n_theta_starts" ).integer();
    if( a.has( "lambda" ) ) cfg.lambda = a.at( "lambda" ).number();
    if( a.has( "vdm_max_iter" ) ) cfg.vdm_max_iter = a.at( "vdm_max_iter" ).integer();
    if( a.has( "vdm_lambda" ) ) cfg.vdm_lambda = a.at( "vdm_lambda" ).number();
    if( a.has( "eps_sip" ) ) cfg.eps_sip = a.at( "eps_sip" ).number();
    if( a.has( "max_iter_sip" ) ) cfg.max_iter_sip = a.at( "max_iter_sip" ).integer();
    if( a.has( "max_sip_tightenings" ) ) cfg.max_sip_tightenings = a.at( "max_sip_tightenings" ).integer();
    if( a.has( "lp_method" ) ){
      auto const m = a.at( "lp_method" ).string();
      if( m == "interior_point" ) cfg.lp_method = LpMethod::interior_point;
      else if( m == "simplex" ) cfg.lp_method = LpMethod::simplex;
      else a.at( "lp_method" ).fail( "expected interior_point or simplex" );
    }
    if( a.has( "vdm_step" ) ){
      auto const m = a.at( "vdm_step" ).string();
      if( m == "harmonic" ) cfg.vdm_step = VdmStep::harmonic;
      else if( m == "line_search" ) cfg.vdm_step = VdmStep::line_search;
      else a.at( "vdm_step" ).fail( "expected harmonic or line_search" );
    }
    if( a.has( "theta_disc0" ) ){
      cfg.theta_disc0 = a.at( "theta_disc0" ).number_rows();
      for( std::size_t i = 0; i < cfg.theta_disc0.size(); ++i )
        if( cfg.theta_disc0[i].size() != pair.parameter_space.dim() || !pair.parameter_space.contains( cfg.theta_disc0[i] ) )
          a.at( "theta_disc0" ).index( i ).fail( "parameter vector outside the parameter space" );
    }
    if( a.has( "global_search" ) ){
      auto const g = a.at( "global_search" );
      g.only( { "grid_per_dim", "refine_top", "local_tol" } );
      if( g.has( "grid_per_dim" ) ) cfg.global.grid_per_dim = g.at( "grid_per_dim" ).integer();
      if( g.has( "refine_top" ) ) cfg.global.refine_top = g.at( "refine_top" ).integer();
      if( g.has( "local_tol" ) ) cfg.global.local_tol = g.at( "local_tol" ).number();
      if( cfg.global.grid_per_dim < 2 ) g.at( "grid_per_dim" ).fail( "must be at least 2" );
      if( cfg.global.refine_top < 1 ) g.at( "refine_top" ).fail( "must be at least 1" );
      if( !( cfg.global.local_tol > 0. ) ) g.at( "local_tol" ).fail( "must be positive" );
    }
    for( auto alg : { Algorithm::two_adapt, Algorithm::disc, Algorithm::vdm } ) field( a, [&]{ cfg.params( alg ).validate(); return 0; } );
  }

  if( r.has( "output" ) ){
    auto const o = r.at( "output" );
    o.only( { "directory", "emit_psi_curve", "psi_grid" } );
    if( o.has( "directory" ) ) cfg.output_directory = o.at( "directory" ).string();
    if( o.has( "emit_psi_curve" ) ) cfg.emit_psi_curve = o.at( "emit_psi_curve" ).boolean();
    if( o.has( "psi_grid" ) ) cfg.psi_grid = o.at( "psi_grid" ).integer();
    if( cfg.psi_grid < 2 ) o.at( "psi_grid" ).fail( "must be at least 2" );
  }
  return cfg;
}

ProblemConfig load_config( std::filesystem::path const& path )
{
  std::ifstream in( path );
  if( !in ) throw ConfigError( fmt::format( "cannot open config file '{}'", path.string() ) );
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config( ss.str(), path.string() );
}

} // namespace discrim
