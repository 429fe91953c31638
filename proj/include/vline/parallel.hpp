#pragma once

#include <cstddef>
#include <cstdint>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace vline {

/// Controls how operator applications spread work across threads.
///
/// In deterministic mode every scatter-type reduction is split into a fixed
/// number of chunks that are merged in chunk order, so results are
/// bit-identical independent of the thread count.
struct ExecutionPolicy {
  bool deterministic = true;
  int threads = 0;  // 0: runtime default
};

inline int thread_count(const ExecutionPolicy& policy) {
#if defined(_OPENMP)
  return policy.threads > 0 ? policy.threads : omp_get_max_threads();
#else
  (void)policy;
  return 1;
#endif
}

inline int current_thread() {
#if defined(_OPENMP)
  return omp_get_thread_num();
#else
  return 0;
#endif
}

/// Runs body(i) for i in [0, n). Iterations must write disjoint outputs.
template <typename Body>
void parallel_for(std::ptrdiff_t n, const ExecutionPolicy& policy, Body&& body) {
#if defined(_OPENMP)
  const int nt = thread_count(policy);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#else
  (void)policy;
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#endif
}

/// SplitMix64 finalizer; derives independent stream seeds from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Named consumers of the experiment-level seed.
enum class SeedStream : std::uint64_t { noise = 1, power_iteration = 2, test_vectors = 3 };

inline std::uint64_t derive_seed(std::uint64_t base, SeedStream stream) {
  return derive_seed(base, static_cast<std::uint64_t>(stream));
}

}  // namespace vline
