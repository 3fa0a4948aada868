#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace drstrat {

// Resolve a thread-count request: n >= 1 is taken literally, n <= 0 means
// "machine parallelism" (DRSTRAT_THREADS env var, then OpenMP default).
inline int resolve_threads(int requested) {
    if (requested >= 1) return requested;
    if (const char* env = std::getenv("DRSTRAT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace drstrat
