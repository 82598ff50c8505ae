#pragma once

namespace lpeq {

/// Kernels ship in two flavours: a plain serial loop kept as the reference
/// and an OpenMP version. Both produce bit-identical output.
enum class Execution { serial, parallel };

}  // namespace lpeq
