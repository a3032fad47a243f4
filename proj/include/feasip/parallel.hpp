#pragma once

#include <cstddef>

namespace feasip {

/// Serial is the reference path; parallel must produce bit-identical results
/// because every kernel writes into per-index slots and reduces in index order.
enum class Exec { serial, parallel };

int thread_count();
void set_thread_count(int n);

/// Reads FEASIP_THREADS (falls back to the OpenMP default when unset).
void configure_threads_from_env();

template <class Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn)
{
    const long count = static_cast<long>(n);
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (long i = 0; i < count; ++i)
            fn(static_cast<std::size_t>(i));
    } else {
        for (long i = 0; i < count; ++i)
            fn(static_cast<std::size_t>(i));
    }
}

}  // namespace feasip
