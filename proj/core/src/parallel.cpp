#include "lsvd/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lsvd {

int worker_threads() {
  if (const char* env = std::getenv("LSVD_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void configure_threads() {
#ifdef _OPENMP
  omp_set_num_threads(worker_threads());
#endif
}

}  // namespace lsvd
