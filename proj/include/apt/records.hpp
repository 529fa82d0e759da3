#pragma once

#include <cstddef>
#include <cstdint>

namespace apt {

/// One proposed swap between chains n-1 and n.
struct SwapRecord {
  std::size_t iteration = 0;
  std::size_t pair = 0;
  double work_forward = 0.0;
  double work_backward = 0.0;
  /// Acceptance probability min(1, exp(W_bwd - W_fwd)); 0 for non-finite work.
  double alpha = 0.0;
  bool accepted = false;
  bool nonfinite = false;
  std::uint64_t potential_evals = 0;
  std::uint64_t network_evals = 0;
};

}  // namespace apt
