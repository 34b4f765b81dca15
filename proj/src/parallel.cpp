#include "discrim/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace discrim
{

namespace
{
std::atomic<unsigned> g_threads{ 0 };
}

void set_thread_count( unsigned n ) { g_threads = n; }

unsigned thread_count()
{
  unsigned n = g_threads;
  if( n == 0 ) n = std::max( 1u, std::thread::hardware_concurrency() );
  return n;
}

void parallel_for( std::size_t n, std::function<void( std::size_t )> const& body )
{
  std::size_t const workers = std::min<std::size_t>( thread_count(), n );
  if( workers <= 1 ){
    for( std::size_t i = 0; i < n; ++i ) body( i );
    return;
  }

  std::vector<std::exception_ptr> errors( workers );
  auto run_chunk = [&]( std::size_t w ){
    std::size_t const begin = n * w / workers, end = n * ( w + 1 ) / workers;
    try{
      for( std::size_t i = begin; i < end; ++i ) body( i );
    }
    catch( ... ){
      errors[w] = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve( workers - 1 );
  for( std::size_t w = 1; w < workers; ++w ) pool.emplace_back( run_chunk, w );
  run_chunk( 0 );
  for( auto& t : pool ) t.join();
  for( auto const& e : errors )
    if( e ) std::rethrow_exception( e );
}

} // namespace discrim
