#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "protocol.hpp"

namespace psl {

enum class RecordMode { Full, Summary };

/// One recorded step: the state after consuming this step's signals. The
/// graph used to produce step k is schedule(k-1), so it is not stored.
struct TraceStep {
  std::int64_t k = 0;
  std::vector<double> log_belief;  // n*m, agent-major
  std::vector<double> weight;      // n
  std::vector<int> signal;         // n, the signal consumed at this step

  double log_belief_at(int agent, int theta, int m) const {
    return log_belief[static_cast<std::size_t>(agent * m + theta)];
  }
};

/// Full per-run record of a trajectory. Step 0 (uniform beliefs, unit
/// weights) is implicit; records run from step 1 to the horizon, every step
/// in Full mode, every 10th plus endpoints in Summary mode.
struct Trace {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int n = 0;
  int m = 0;
  std::int64_t horizon = 0;
  Variant variant = Variant::PushSum;
  RecordMode record = RecordMode::Full;
  std::vector<TraceStep> steps;  // ascending k

  const TraceStep& last() const {
    if (steps.empty()) throw Error("trace: empty");
    return steps.back();
  }

  /// Index into steps of the first record with k >= k0; steps.size() if none.
  std::size_t lower_bound(std::int64_t k0) const {
    std::size_t lo = 0, hi = steps.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (steps[mid].k < k0)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }
};

}  // namespace psl
