#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "discrim/lsq.hpp"
#include "discrim/models.hpp"

using namespace discrim;

namespace
{

// reference points of the unscrambled Sobol sequence (index 0 is the origin)
struct SobolRef
{
  std::size_t index;
  Vector coords;
};

std::vector<SobolRef> const sobol_reference = {
  { 1, Vector( 21, 0.5 ) },
  { 2, { 0.75, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.25 } },
  { 3, { 0.25, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25, 0.25, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.75, 0.75 } },
  { 7, { 0.125, 0.625, 0.375, 0.125, 0.125, 0.375, 0.625, 0.625, 0.625, 0.875, 0.625, 0.125, 0.625, 0.375, 0.125, 0.125, 0.125, 0.125, 0.625, 0.875, 0.875 } },
  { 37, { 0.921875, 0.640625, 0.578125, 0.921875, 0.765625, 0.296875, 0.171875, 0.796875, 0.609375, 0.171875, 0.015625, 0.078125, 0.578125, 0.859375, 0.109375, 0.484375, 0.796875, 0.421875, 0.046875, 0.140625, 0.953125 } },
  { 255, { 0.00390625, 0.99609375, 0.76953125, 0.57421875, 0.61328125, 0.98046875, 0.88671875, 0.17578125, 0.44140625, 0.35546875, 0.13671875, 0.16796875, 0.19921875, 0.63671875, 0.61328125, 0.51953125, 0.40234375, 0.42578125, 0.73046875, 0.25390625, 0.31640625 } },
  { 1000, { 0.2197265625, 0.0966796875, 0.5185546875, 0.6767578125, 0.2802734375, 0.9072265625, 0.0458984375, 0.8994140625, 0.5009765625, 0.0693359375, 0.0849609375, 0.2548828125, 0.1611328125, 0.3837890625, 0.1435546875, 0.3701171875, 0.7197265625, 0.3447265625, 0.9912109375, 0.7255859375, 0.5224609375 } },
  { 1024, { 0.00146484375, 0.37646484375, 0.44775390625, 0.48681640625, 0.55712890625, 0.84423828125, 0.24169921875, 0.58740234375, 0.69677734375, 0.67138671875, 0.82177734375, 0.92138671875, 0.70654296875, 0.33837890625, 0.13232421875, 0.85693359375, 0.85498046875, 0.19775390625, 0.53857421875, 0.34619140625, 0.52490234375 } },
};

ModelPair toy_pair()
{
  return make_scalar_pair( []( std::span<double const> x ){ return x[0]; },
                           []( std::span<double const>, std::span<double const> t ){ return t[0]; },
                           ParameterSpace( { 0. }, { 1. } ) );
}

} // namespace

TEST_CASE( "sobol points match the reference sequence" )
{
  ParameterSpace const unit( Vector( sobol_max_dim, 0. ), Vector( sobol_max_dim, 1. ) );
  auto const pts = sobol_points( sobol_max_dim, 1024, unit );
  REQUIRE( pts.size() == 1024 );
  for( auto const& ref : sobol_reference ){
    CAPTURE( ref.index );
    CHECK( pts[ref.index - 1] == ref.coords );
  }

  ParameterSpace const four( Vector( 4, 0. ), Vector( 4, 1. ) );
  std::vector<Vector> const first9 = { { .5, .5, .5, .5 },         { .75, .25, .25, .25 },     { .25, .75, .75, .75 },
                                       { .375, .375, .625, .875 }, { .875, .875, .125, .375 }, { .625, .125, .875, .625 },
                                       { .125, .625, .375, .125 }, { .1875, .3125, .9375, .4375 },
                                       { .6875, .8125, .4375, .9375 } };
  CHECK( sobol_points( 4, 9, four ) == first9 );
}

TEST_CASE( "sobol edge cases and mapping" )
{
  ParameterSpace const box( { 0., 0. }, { 2., 2. } );
  CHECK( sobol_points( 2, 0, box ).empty() );
  auto p = sobol_points( 2, 3, box );
  CHECK( p[0] == Vector{ 1., 1. } );
  CHECK( p[1] == Vector{ 1.5, 0.5 } );
  ParameterSpace const big( Vector( 22, 0. ), Vector( 22, 1. ) );
  CHECK_THROWS_AS( sobol_points( 22, 1, big ), InvalidArgument );
  for( auto const& q : sobol_points( 2, 500, box ) ) CHECK( box.contains( q ) );
}

TEST_CASE( "fit on the linear-vs-constant pair" )
{
  auto toy = toy_pair();
  Design const d( { { 0. }, { 1. } }, { 0.5, 0.5 } );
  FitConfig cfg;
  cfg.lambda = 0.;
  auto r = fit_parameters( toy, d, std::nullopt, cfg );
  CHECK( r.theta_hat[0] == doctest::Approx( 0.5 ).epsilon( 1e-9 ) );
  CHECK( r.objective == doctest::Approx( 0.25 ).epsilon( 1e-12 ) );

  // unequal weights: the weighted mean
  Design const e( { { 0. }, { 1. } }, { 0.2, 0.8 } );
  auto s = fit_parameters( toy, e, Vector{ 0.1 }, cfg );
  CHECK( s.theta_hat[0] == doctest::Approx( 0.8 ).epsilon( 1e-9 ) );
  CHECK( s.objective == doctest::Approx( 0.16 ).epsilon( 1e-10 ) );
}

TEST_CASE( "regularisation pulls the fit toward zero-weight points" )
{
  auto toy = toy_pair();
  Design const d( { { 0. }, { 1. } }, { 0., 1. } );
  FitConfig cfg;
  cfg.lambda = 0.25;
  auto r = fit_parameters( toy, d, std::nullopt, cfg );
  // minimise (1 + l) (1 - t)^2 + l t^2
  double const expect = 1.25 / 1.5;
  CHECK( r.theta_hat[0] == doctest::Approx( expect ).epsilon( 1e-8 ) );
  CHECK( r.objective == doctest::Approx( ( 1. - expect ) * ( 1. - expect ) ).epsilon( 1e-8 ) );
  CHECK( r.regularized_objective
         == doctest::Approx( 1.25 * ( 1. - expect ) * ( 1. - expect ) + 0.25 * expect * expect ).epsilon( 1e-8 ) );
}

TEST_CASE( "exact fit when the reference lies in the alternative family" )
{
  auto pair = models::make_mm_pair( { { "F", 0. }, { "V", 2. }, { "K", 0.7 } } );
  Design const d( { { 0.5 }, { 2. }, { 4. } }, { 0.3, 0.3, 0.4 } );
  FitConfig cfg;
  cfg.lambda = 0.;
  auto r = fit_parameters( pair, d, std::nullopt, cfg );
  CHECK( r.objective <= 1e-16 );
  CHECK( r.theta_hat[0] == doctest::Approx( 2. ).epsilon( 1e-6 ) );
  CHECK( r.theta_hat[1] == doctest::Approx( 0.7 ).epsilon( 1e-6 ) );
}

TEST_CASE( "fit on the three-point MM design agrees with a dense grid oracle" )
{
  auto mm = models::make_mm_pair();
  Design const d( { { 0.386 }, { 2.596 }, { 5. } }, { 0.3906, 0.3896, 0.2198 } );
  FitConfig cfg;
  cfg.lambda = 0.;
  auto r = fit_parameters( mm, d, std::nullopt, cfg );

  // grid oracle over the full parameter box, then a finer local grid
  double best = std::numeric_limits<double>::infinity(), bv = 0., bk = 0.;
  auto scan = [&]( double v0, double v1, double k0, double k1, int n ){
    for( int i = 0; i <= n; ++i )
      for( int j = 0; j <= n; ++j ){
        double const v = v0 + ( v1 - v0 ) * i / n, k = k0 + ( k1 - k0 ) * j / n;
        double t = 0.;
        for( std::size_t p = 0; p < d.size(); ++p ){
          double const x = d.point( p )[0];
          double const res = models::modmm_eval( x, 1., 1., 0.1 ) - v * x / ( k + x );
          t += d.weight( p ) * res * res;
        }
        if( t < best ){
          best = t;
          bv = v;
          bk = k;
        }
      }
  };
  scan( 1e-3, 5., 1e-3, 5., 500 );
  double const h = 5. / 500;
  scan( bv - 2 * h, bv + 2 * h, bk - 2 * h, bk + 2 * h, 400 );

  CHECK( r.objective <= best + 1e-12 );
  CHECK( r.objective >= best - 1e-8 );
  CHECK( r.theta_hat[0] == doctest::Approx( 1.86 ).epsilon( 0.01 ) );
  CHECK( r.theta_hat[1] == doctest::Approx( 2.15 ).epsilon( 0.01 ) );
}

TEST_CASE( "fit property: T at theta_hat is no larger than at random parameters" )
{
  auto mm = models::make_mm_pair();
  std::mt19937 rng( 17 );
  std::uniform_real_distribution<double> ux( 0.01, 5. ), ut( 1e-3, 5. );
  FitConfig cfg;
  cfg.lambda = 0.;
  for( int rep = 0; rep < 10; ++rep ){
    Design const d = Design::uniform( { { ux( rng ) }, { ux( rng ) }, { ux( rng ) } } );
    auto r = fit_parameters( mm, d, std::nullopt, cfg );
    CHECK( mm.parameter_space.contains( r.theta_hat ) );
    for( int k = 0; k < 50; ++k ){
      double const th[] = { ut( rng ), ut( rng ) };
      CHECK( r.objective <= t_value( mm, d, th ) + 1e-12 );
    }
  }
}

TEST_CASE( "bounded least squares respects the box" )
{
  // minimiser of (x - 3)^2 over [0, 1] is the upper bound
  auto res = []( std::span<double const> x, std::span<double> r ){ r[0] = x[0] - 3.; };
  auto out = detail::solve_bounded_lsq( res, 1, { 0.2 }, ParameterSpace( { 0. }, { 1. } ), 1e-12, 100 );
  CHECK( out.x[0] == 1. );
  CHECK( out.cost == doctest::Approx( 2. ) );
}

TEST_CASE( "fit errors" )
{
  auto bad = make_scalar_pair( []( std::span<double const> ){ return 0.; },
                               []( std::span<double const>, std::span<double const> ) -> double {
                                 throw EvaluationError( "always fails", {}, {} );
                               },
                               ParameterSpace( { 0. }, { 1. } ) );
  CHECK_THROWS_AS( fit_parameters( bad, Design::point_mass( { 0. } ), std::nullopt ), FitError );
}
