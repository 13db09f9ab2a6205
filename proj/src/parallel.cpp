#include "rfc/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rfc::parallel {

namespace {
int g_threads = 0;
}

int threads() {
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) { g_threads = n > 0 ? n : 0; }

}  // namespace rfc::parallel
