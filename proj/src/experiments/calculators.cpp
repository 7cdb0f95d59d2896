#include "gapnet/experiments/calculators.hpp"

#include <cmath>
#include <limits>

#include "gapnet/errors.hpp"

namespace gapnet::experiments {

namespace {

using Int = __int128;

Int nanoseconds(double seconds, const char* what) {
  if (!std::isfinite(seconds) || seconds < 0.0) {
    throw InvalidArgument(std::string(what) + " must be a finite non-negative time");
  }
  if (seconds > 1e15) throw OverflowError(std::string(what) + " is too large");
  return static_cast<Int>(std::llround(seconds * 1e9));
}

}  // namespace

SpeedupVerdict speedup(const SpeedupInputs& in) {
  if (!std::isfinite(in.n_train) || in.n_train < 0.0 || in.n_train != std::floor(in.n_train)) {
    throw InvalidArgument("N_train must be a non-negative integer");
  }
  if (in.n_train > 1e15) throw OverflowError("N_train is too large");
  const Int n_train = static_cast<Int>(in.n_train);
  const Int alg = nanoseconds(in.tau_alg, "tau_alg");
  const Int train = nanoseconds(in.tau_train, "tau_train");
  const Int nn = nanoseconds(in.tau_nn, "tau_nn");
  const Int large = in.tau_alg_large < 0.0 ? alg : nanoseconds(in.tau_alg_large, "tau_alg_large");

  SpeedupVerdict v;
  const Int cost = n_train * (alg + train);
  const Int margin = large - nn;
  v.fixed_cost = static_cast<double>(cost) * 1e-9;
  v.margin = static_cast<double>(margin) * 1e-9;
  if (margin <= 0) {
    v.never_beneficial = true;
    if (in.n_use) {
      v.beneficial = false;
      v.balance = static_cast<double>(static_cast<Int>(*in.n_use) * margin - cost) * 1e-9;
    }
    return v;
  }
  // Strict inequality: N_use * margin > cost.
  const Int n_min = cost / margin + 1;
  if (n_min > static_cast<Int>(std::numeric_limits<std::uint64_t>::max())) {
    throw OverflowError("break-even N_use does not fit in 64 bits");
  }
  v.min_n_use = static_cast<std::uint64_t>(n_min);
  if (in.n_use) {
    const Int balance = static_cast<Int>(*in.n_use) * margin - cost;
    v.beneficial = balance > 0;
    v.balance = static_cast<double>(balance) * 1e-9;
  }
  return v;
}

nlohmann::ordered_json to_json(const SpeedupInputs& in, const SpeedupVerdict& v) {
  nlohmann::ordered_json j;
  j["inputs"] = {{"n_train", in.n_train},
                 {"tau_alg", in.tau_alg},
                 {"tau_train", in.tau_train},
                 {"tau_nn", in.tau_nn},
                 {"tau_alg_large", in.tau_alg_large < 0.0 ? in.tau_alg : in.tau_alg_large}};
  if (in.n_use) j["inputs"]["n_use"] = *in.n_use;
  j["fixed_cost_seconds"] = v.fixed_cost;
  j["saving_per_use_seconds"] = v.margin;
  if (v.never_beneficial) {
    j["verdict"] = "never beneficial";
    j["min_n_use"] = nullptr;
  } else {
    j["min_n_use"] = v.min_n_use;
  }
  if (v.beneficial) {
    j["beneficial"] = *v.beneficial;
    j["balance_seconds"] = *v.balance;
  }
  return j;
}

std::uint64_t estimate_runs(std::uint64_t n, std::uint64_t n_t, std::uint64_t shots) {
  if (n == 0 || n_t == 0 || shots == 0) throw InvalidArgument("run counts must be positive integers");
  std::uint64_t partial = 0;
  std::uint64_t total = 0;
  if (__builtin_mul_overflow(n, n_t, &partial) || __builtin_mul_overflow(partial, shots, &total)) {
    throw OverflowError("run count overflows 64 bits");
  }
  return total;
}

double run_time_seconds(std::uint64_t runs, double seconds_per_run) {
  if (!std::isfinite(seconds_per_run) || seconds_per_run < 0.0) {
    throw InvalidArgument("time per run must be a finite non-negative number");
  }
  return static_cast<double>(runs) * seconds_per_run;
}

}  // namespace gapnet::experiments
