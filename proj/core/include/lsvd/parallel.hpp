#pragma once

namespace lsvd {

// Worker cap: LSVD_THREADS when it parses as a positive integer, otherwise the
// number of hardware threads.
int worker_threads();

// Applies worker_threads() to the OpenMP runtime (and so to Eigen's GEMM).
// Results do not depend on the thread count.
void configure_threads();

}  // namespace lsvd
