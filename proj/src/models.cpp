#include "discrim/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace discrim::models
{

double mm_eval( double x, double V, double K )
{
  if( K + x <= 1e-15 ) throw std::domain_error( fmt::format( "Michaelis-Menten denominator K + x = {} too small", K + x ) );
  return V * x / ( K + x );
}

double modmm_eval( double x, double V, double K, double F ) { return mm_eval( x, V, K ) + F * x; }

Concentrations integrate_kinetics( KineticsParams const& p, KineticsInput const& in, IntegratorTol const& tol )
{
  auto rhs = [&p]( double, Concentrations const& y, Concentrations& dy ){
    double const a = std::max( y[0], 0. ), b = std::max( y[1], 0. );
    double const r1 = p.k1 * std::pow( a, p.n1 );
    double const r2 = p.k2 * std::pow( b, p.n2 );
    double const r3 = p.k3 == 0. ? 0. : p.k3 * std::pow( b, p.n3 );
    dy[0] = -r1 + r3;
    dy[1] = r1 - r2 - r3;
    dy[2] = r2;
  };
  return integrate_dopri5<3>( rhs, Concentrations{ in.a0, in.b0, in.c0 }, 0., in.t, tol );
}

namespace
{

double get_or( ParamMap const& m, std::string const& key, double fallback )
{
  auto it = m.find( key );
  return it == m.end() ? fallback : it->second;
}

} // namespace

ModelPair make_mm_pair( ParamMap const& params )
{
  double const V = get_or( params, "V", 1. ), K = get_or( params, "K", 1. ), F = get_or( params, "F", 0.1 );
  ModelPair pair;
  pair.name = "mm_vs_modmm";
  pair.response_dim = 1;
  pair.parameter_space = ParameterSpace( { 1e-3, 1e-3 }, { 5., 5. } );
  pair.reference = [V, K, F]( std::span<double const> x, std::span<double> out ){
    try{
      out[0] = modmm_eval( x[0], V, K, F );
    }
    catch( std::domain_error const& e ){
      throw EvaluationError( e.what(), Vector( x.begin(), x.end() ), {} );
    }
  };
  pair.alternative = []( std::span<double const> x, std::span<double const> th, std::span<double> out ){
    try{
      out[0] = mm_eval( x[0], th[0], th[1] );
    }
    catch( std::domain_error const& e ){
      throw EvaluationError( e.what(), Vector( x.begin(), x.end() ), Vector( th.begin(), th.end() ) );
    }
  };
  return pair;
}

ModelPair make_kinetics_pair( ParamMap const& params )
{
  KineticsParams ref;
  ref.k1 = get_or( params, "k1", 0.7 );
  ref.k2 = get_or( params, "k2", 0.2 );
  ref.k3 = get_or( params, "k3", 0.1 );
  ref.n1 = get_or( params, "n1", 2. );
  ref.n2 = get_or( params, "n2", 2. );
  ref.n3 = get_or( params, "n3", 1. );
  IntegratorTol tol;
  tol.rel = get_or( params, "rtol", tol.rel );
  tol.abs = get_or( params, "atol", tol.abs );

  auto input_of = []( std::span<double const> x ){ return KineticsInput{ x[0], x[1], x[2], x[3] }; };

  ModelPair pair;
  pair.name = "kinetics_rev_vs_irrev";
  pair.response_dim = 3;
  pair.parameter_space = ParameterSpace( { 0.5, 0.05, 1.5, 1.5 }, { 1.0, 0.5, 3.5, 3.0 } );
  pair.reference = [ref, tol, input_of]( std::span<double const> x, std::span<double> out ){
    try{
      auto const c = integrate_kinetics( ref, input_of( x ), tol );
      std::copy( c.begin(), c.end(), out.begin() );
    }
    catch( IntegrationError<3> const& e ){
      throw EvaluationError( e.what(), Vector( x.begin(), x.end() ), {} );
    }
  };
  pair.alternative = [tol, input_of]( std::span<double const> x, std::span<double const> th, std::span<double> out ){
    KineticsParams p{ th[0], th[1], 0., th[2], th[3], 1. };
    try{
      auto const c = integrate_kinetics( p, input_of( x ), tol );
      std::copy( c.begin(), c.end(), out.begin() );
    }
    catch( IntegrationError<3> const& e ){
      throw EvaluationError( e.what(), Vector( x.begin(), x.end() ), Vector( th.begin(), th.end() ) );
    }
  };
  return pair;
}

////////////////////////////////////////////////////////////////////////
// Registry
////////////////////////////////////////////////////////////////////////

Registry::Registry()
{
  add( "mm_vs_modmm", { "V", "K", "F" }, make_mm_pair );
  add( "kinetics_rev_vs_irrev", { "k1", "k2", "k3", "n1", "n2", "n3", "rtol", "atol" }, make_kinetics_pair );
}

Registry& Registry::global()
{
  static Registry instance;
  return instance;
}

void Registry::add( std::string const& name, std::vector<std::string> keys, ModelFactory factory )
{
  entries_[name] = Entry{ std::move( keys ), std::move( factory ) };
}

ModelPair Registry::lookup( std::string const& name, ParamMap const& params ) const
{
  auto it = entries_.find( name );
  if( it == entries_.end() ) throw InvalidArgument( fmt::format( "unknown model '{}'", name ) );
  for( auto const& [key, value] : params ){
    if( std::find( it->second.keys.begin(), it->second.keys.end(), key ) == it->second.keys.end() )
      throw InvalidArgument( fmt::format( "model '{}' has no parameter '{}'", name, key ) );
    if( !std::isfinite( value ) )
      throw InvalidArgument( fmt::format( "model '{}' parameter '{}' is not finite", name, key ) );
  }
  return it->second.factory( params );
}

std::vector<std::string> Registry::names() const
{
  std::vector<std::string> out;
  for( auto const& [name, entry] : entries_ ) out.push_back( name );
  return out;
}

} // namespace discrim::models
