#ifndef DISCRIM_PARALLEL_HPP
#define DISCRIM_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace discrim
{

//! @brief Upper bound on worker threads used by parallel_for (0 selects hardware concurrency)
void set_thread_count( unsigned n );
unsigned thread_count();

//! @brief Calls body(i) for i in [0, n), possibly from several threads.
////////////////////////////////////////////////////////////////////////
//! Iterations are statically partitioned; callers write results into
//! index-addressed slots. The exception from the lowest-indexed failing chunk is rethrown
//! after all workers have joined.
////////////////////////////////////////////////////////////////////////
void parallel_for( std::size_t n, std::function<void( std::size_t )> const& body );

} // namespace discrim

#endif
