#include "feasip/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace feasip {

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int n)
{
    if (n > 0)
        omp_set_num_threads(n);
}

void configure_threads_from_env()
{
    if (const char* env = std::getenv("FEASIP_THREADS")) {
        try {
            set_thread_count(std::stoi(env));
        } catch (const std::exception&) {
        }
    }
}

}  // namespace feasip
