#pragma once

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hb {

/// Execution policy for the fan-out sampling kernels.  Parallel runs the
/// per-sample loop under OpenMP; Serial is the reference implementation kept
/// for testing.  Both write each sample into its own slot and reduce in index
/// order afterwards, so the two policies (and any worker count) produce
/// bit-identical results.
enum class ExecPolicy { Serial, Parallel };

struct ExecConfig {
  ExecPolicy policy = ExecPolicy::Parallel;
  int workers = 0;  // 0 = library default
};

template <typename F>
void for_each_index(int n, const ExecConfig& cfg, F&& body) {
  if (cfg.policy == ExecPolicy::Parallel) {
#ifdef _OPENMP
    if (cfg.workers > 0) {
#pragma omp parallel for schedule(dynamic, 4) num_threads(cfg.workers)
      for (int i = 0; i < n; ++i) body(i);
    } else {
#pragma omp parallel for schedule(dynamic, 4)
      for (int i = 0; i < n; ++i) body(i);
    }
    return;
#endif
  }
  for (int i = 0; i < n; ++i) body(i);
}

}  // namespace hb
