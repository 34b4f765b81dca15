#include "discrim/lsq.hpp"

#include <array>
#include <cstdint>

#include <fmt/format.h>

namespace discrim
{

namespace
{

struct DirectionNumbers
{
  unsigned s;  // degree of the primitive polynomial
  unsigned a;  // interior coefficients
  std::array<std::uint32_t, 7> m;
};

// Joe & Kuo (2008) new-joe-kuo-6.21201, dimensions 2..21
constexpr std::array<DirectionNumbers, sobol_max_dim - 1> joe_kuo{ {
  { 1, 0, { 1 } },
  { 2, 1, { 1, 3 } },
  { 3, 1, { 1, 3, 1 } },
  { 3, 2, { 1, 1, 1 } },
  { 4, 1, { 1, 1, 3, 3 } },
  { 4, 4, { 1, 3, 5, 13 } },
  { 5, 2, { 1, 1, 5, 5, 17 } },
  { 5, 4, { 1, 1, 5, 5, 5 } },
  { 5, 7, { 1, 1, 7, 11, 19 } },
  { 5, 11, { 1, 1, 5, 1, 1 } },
  { 5, 13, { 1, 1, 1, 3, 11 } },
  { 5, 14, { 1, 3, 5, 5, 31 } },
  { 6, 1, { 1, 3, 3, 9, 7, 49 } },
  { 6, 13, { 1, 1, 1, 15, 21, 21 } },
  { 6, 16, { 1, 3, 1, 13, 27, 49 } },
  { 6, 19, { 1, 1, 1, 15, 7, 5 } },
  { 6, 22, { 1, 3, 1, 15, 13, 25 } },
  { 6, 25, { 1, 1, 5, 5, 19, 61 } },
  { 7, 1, { 1, 3, 7, 11, 23, 15, 103 } },
  { 7, 4, { 1, 3, 7, 13, 13, 15, 69 } },
} };

constexpr unsigned n_bits = 32;

std::array<std::uint32_t, n_bits> direction_vector( std::size_t dim_index )
{
  std::array<std::uint32_t, n_bits> v{};
  if( dim_index == 0 ){
    for( unsigned i = 0; i < n_bits; ++i ) v[i] = std::uint32_t{ 1 } << ( n_bits - 1 - i );
    return v;
  }
  auto const& dn = joe_kuo[dim_index - 1];
  for( unsigned i = 0; i < dn.s; ++i ) v[i] = dn.m[i] << ( n_bits - 1 - i );
  for( unsigned i = dn.s; i < n_bits; ++i ){
    v[i] = v[i - dn.s] ^ ( v[i - dn.s] >> dn.s );
    for( unsigned k = 1; k < dn.s; ++k )
      if( ( dn.a >> ( dn.s - 1 - k ) ) & 1u ) v[i] ^= v[i - k];
  }
  return v;
}

} // namespace

std::vector<Vector> sobol_points( std::size_t dim, std::size_t n, ParameterSpace const& box )
{
  if( dim == 0 ) throw InvalidArgument( "Sobol dimension must be at least 1" );
  if( dim > sobol_max_dim )
    throw InvalidArgument( fmt::format( "Sobol dimension {} exceeds the supported maximum {}", dim, sobol_max_dim ) );
  if( box.dim() != dim ) throw InvalidArgument( "Sobol dimension does not match the box dimension" );
  if( n >= ( std::size_t{ 1 } << n_bits ) ) throw InvalidArgument( "too many Sobol points requested" );

  std::vector<std::array<std::uint32_t, n_bits>> v( dim );
  for( std::size_t j = 0; j < dim; ++j ) v[j] = direction_vector( j );

  std::vector<Vector> out;
  out.reserve( n );
  std::vector<std::uint32_t> x( dim, 0 );
  constexpr double scale = 1. / 4294967296.;
  for( std::size_t k = 1; k <= n; ++k ){
    // Gray-code update with the rightmost zero bit of k - 1
    std::size_t c = 0;
    for( std::size_t m = k - 1; m & 1u; m >>= 1 ) ++c;
    Vector p( dim );
    for( std::size_t j = 0; j < dim; ++j ){
      x[j] ^= v[j][c];
      double const u = static_cast<double>( x[j] ) * scale;
      p[j] = box.lower[j] + u * ( box.upper[j] - box.lower[j] );
    }
    out.push_back( std::move( p ) );
  }
  return out;
}

} // namespace discrim
