#pragma once

namespace alloctime {

/// Selects the kernel path. `serial` is the reference implementation the
/// OpenMP path is tested against.
enum class Exec { serial, parallel };

/// Number of threads the parallel path would use.
int max_threads();

}  // namespace alloctime
