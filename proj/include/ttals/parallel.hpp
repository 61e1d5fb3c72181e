#pragma once

#include <cstdlib>
#include <string>

#include <omp.h>

namespace ttals {

/// Worker thread cap: TT_THREADS if set to a positive integer, else the OpenMP default.
inline int worker_threads() {
  if (const char* env = std::getenv("TT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
}

}  // namespace ttals
