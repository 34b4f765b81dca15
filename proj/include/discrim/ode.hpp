#ifndef DISCRIM_ODE_HPP
#define DISCRIM_ODE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace discrim
{

struct IntegratorTol
{
  double rel = 1e-8;
  double abs = 1e-10;
  std::size_t max_steps = 100000;
};

//! @brief Step-size underflow or step budget exhausted; carries the last accepted state
template <std::size_t N>
class IntegrationError : public std::runtime_error
{
public:
  IntegrationError( std::string const& what, double t, std::array<double, N> const& y )
    : std::runtime_error( what ), t_( t ), y_( y )
  {}
  double time() const { return t_; }
  std::array<double, N> const& state() const { return y_; }

private:
  double t_;
  std::array<double, N> y_;
};

//! @brief Dormand-Prince 5(4) embedded Runge-Kutta integration of y' = f(t, y) from t0 to t1
////////////////////////////////////////////////////////////////////////
//! Error control on the 5th-order solution (local extrapolation) with the
//! mixed norm sqrt(mean((e_i / (abs + rel max(|y_i|, |y_new_i|)))^2)).
//! The right-hand side has signature void(double t, Y const& y, Y& dy).
////////////////////////////////////////////////////////////////////////
template <std::size_t N, class Rhs>
std::array<double, N> integrate_dopri5( Rhs&& rhs, std::array<double, N> y, double t0, double t1,
                                        IntegratorTol const& tol = {} )
{
  using Y = std::array<double, N>;
  if( t1 == t0 ) return y;
  if( t1 < t0 ) throw std::invalid_argument( "integrate_dopri5 requires t1 >= t0" );

  constexpr double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
  constexpr double a21 = 1. / 5;
  constexpr double a31 = 3. / 40, a32 = 9. / 40;
  constexpr double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
  constexpr double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561, a54 = -212. / 729;
  constexpr double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247, a64 = 49. / 176,
                   a65 = -5103. / 18656;
  constexpr double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784, b6 = 11. / 84;
  // b - b_hat
  constexpr double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920, e5 = -17253. / 339200, e6 = 22. / 525,
                   e7 = -1. / 40;

  auto scaled_norm = [&]( Y const& err, Y const& ya, Y const& yb ){
    double s = 0.;
    for( std::size_t i = 0; i < N; ++i ){
      double const sc = tol.abs + tol.rel * std::max( std::abs( ya[i] ), std::abs( yb[i] ) );
      s += ( err[i] / sc ) * ( err[i] / sc );
    }
    return std::sqrt( s / static_cast<double>( N ) );
  };

  Y k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
  double t = t0;
  rhs( t, y, k1 );

  // initial step (Hairer, Norsett & Wanner, II.4)
  double h;
  {
    Y zero{};
    double const d0 = scaled_norm( y, y, zero ), d1 = scaled_norm( k1, y, zero );
    double h0 = ( d0 < 1e-5 || d1 < 1e-5 ) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min( h0, t1 - t0 );
    for( std::size_t i = 0; i < N; ++i ) ytmp[i] = y[i] + h0 * k1[i];
    rhs( t + h0, ytmp, k2 );
    for( std::size_t i = 0; i < N; ++i ) err[i] = k2[i] - k1[i];
    double const d2 = scaled_norm( err, y, zero ) / h0;
    double const h1 = std::max( d1, d2 ) <= 1e-15 ? std::max( 1e-6, h0 * 1e-3 )
                                                    : std::pow( 0.01 / std::max( d1, d2 ), 1. / 5 );
    h = std::min( { 100. * h0, h1, t1 - t0 } );
  }

  double const h_min_factor = 1e-14;
  for( std::size_t step = 0; step < tol.max_steps; ){
    bool const last = t + h >= t1;
    if( last ) h = t1 - t;
    if( h <= h_min_factor * std::max( 1., std::abs( t ) ) )
      throw IntegrationError<N>( "integration step size underflow", t, y );

    for( std::size_t i = 0; i < N; ++i ) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs( t + c2 * h, ytmp, k2 );
    for( std::size_t i = 0; i < N; ++i ) ytmp[i] = y[i] + h * ( a31 * k1[i] + a32 * k2[i] );
    rhs( t + c3 * h, ytmp, k3 );
    for( std::size_t i = 0; i < N; ++i ) ytmp[i] = y[i] + h * ( a41 * k1[i] + a42 * k2[i] + a43 * k3[i] );
    rhs( t + c4 * h, ytmp, k4 );
    for( std::size_t i = 0; i < N; ++i )
      ytmp[i] = y[i] + h * ( a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i] );
    rhs( t + c5 * h, ytmp, k5 );
    for( std::size_t i = 0; i < N; ++i )
      ytmp[i] = y[i] + h * ( a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i] );
    rhs( t + h, ytmp, k6 );
    for( std::size_t i = 0; i < N; ++i )
      ynew[i] = y[i] + h * ( b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i] );
    rhs( t + h, ynew, k7 );
    for( std::size_t i = 0; i < N; ++i )
      err[i] = h * ( e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i] );

    double const en = scaled_norm( err, y, ynew );
    if( !std::isfinite( en ) ){
      h *= 0.2;
      continue;
    }
    double const fac = en == 0. ? 5. : std::clamp( 0.9 * std::pow( en, -0.2 ), 0.2, 5. );
    if( en <= 1. ){
      t = last ? t1 : t + h;
      y = ynew;
      k1 = k7;
      ++step;
      if( last ) return y;
      h *= fac;
    }
    else{
      h *= std::min( 1., fac );
    }
  }
  throw IntegrationError<N>( "integration step budget exhausted", t, y );
}

} // namespace discrim

#endif
