#pragma once

#include <omp.h>

namespace rkpm {

/// Caps the number of OpenMP workers used by the parallel kernels.
/// 0 keeps the runtime default.
inline void set_num_threads(int n) {
    if (n > 0) omp_set_num_threads(n);
}

inline int max_threads() { return omp_get_max_threads(); }

} // namespace rkpm
