#include "orbitforge/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace orbitforge {

int thread_count() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("ORBITFORGE_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1 && cap < n) n = cap;
        } catch (...) {
            // ignore malformed values, keep the runtime default
        }
    }
    return n;
#else
    return 1;
#endif
}

void configure_threads() {
#ifdef _OPENMP
    omp_set_num_threads(thread_count());
#endif
}

}  // namespace orbitforge
