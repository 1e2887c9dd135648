// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>

namespace hsrdm {

// Process-wide counters for recoverable numerical events. Nothing here
// changes results; callers inspect the counts to audit a run.
struct Diagnostics {
  std::atomic<std::int64_t> dropped_quotients{0};     // smoothing 0/0 terms
  std::atomic<std::int64_t> line_search_failures{0};  // M-step blocks kept
  std::atomic<std::int64_t> singular_regressions{0};  // emission fits kept
  std::atomic<std::int64_t> empty_states{0};          // states skipped in M

  void reset() {
    dropped_quotients = 0;
    line_search_failures = 0;
    singular_regressions = 0;
    empty_states = 0;
  }
};

Diagnostics& diagnostics();

}  // namespace hsrdm
