#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace gapnet::experiments {

// All times in seconds.
struct SpeedupInputs {
  double n_train = 0.0;
  double tau_alg = 0.0;  // per-instance solver time on the training sizes
  double tau_train = 0.0;  // training time per training sample, all epochs
  double tau_nn = 0.0;  // per-instance inference time
  double tau_alg_large = -1.0;  // solver time on the deployment size; negative means tau_alg
  std::optional<std::uint64_t> n_use;
};

struct SpeedupVerdict {
  bool never_beneficial = false;  // tau_nn >= solver time: no N_use ever pays off
  double fixed_cost = 0.0;  // N_train (tau_alg + tau_train)
  double margin = 0.0;  // saving per deployed instance
  std::uint64_t min_n_use = 0;  // smallest N_use satisfying the strict inequality
  std::optional<bool> beneficial;  // for inputs.n_use
  std::optional<double> balance;  // saving minus cost for inputs.n_use
};

// Evaluates N_train (tau_alg + tau_train) + N_use tau_nn < N_use tau_alg_large.
// Times are rounded to whole nanoseconds and compared in integer arithmetic,
// so the break-even count is exact for decimal inputs.
SpeedupVerdict speedup(const SpeedupInputs& in);

nlohmann::ordered_json to_json(const SpeedupInputs& in, const SpeedupVerdict& v);

// n * n_t * shots with overflow detection (throws OverflowError).
std::uint64_t estimate_runs(std::uint64_t n, std::uint64_t n_t, std::uint64_t shots);

// Wall time in seconds for `runs` runs of `seconds_per_run` each.
double run_time_seconds(std::uint64_t runs, double seconds_per_run);

}  // namespace gapnet::experiments
