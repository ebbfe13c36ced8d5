#pragma once

namespace bnpo {

/// Serial runs the reference loop; Parallel runs the same shards under
/// OpenMP. Both produce bit-identical results for the same seed.
enum class Execution { Serial, Parallel };

}  // namespace bnpo
