#include "gapnet/spectrum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "gapnet/errors.hpp"

namespace gapnet {

std::vector<double> problem_diagonal(const ProblemInstance& instance) {
  const int n = instance.n_qubits();
  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> diag(dim, 0.0);

  if (instance.family == Family::LhzPhysical) {
    std::vector<std::uint64_t> masks;
    for (const auto& p : instance.plaquettes) {
      std::uint64_t mask = 0;
      for (int q : p.members()) mask |= std::uint64_t{1} << q;
      masks.push_back(mask);
    }
    const double c = instance.constraint_strength;
    for (std::size_t s = 0; s < dim; ++s) {
      double e = 0.0;
      for (int k = 0; k < n; ++k) {
        const double z = ((s >> k) & 1U) ? -1.0 : 1.0;
        e += instance.couplings[k].value * z;
      }
      for (std::uint64_t mask : masks) {
        e -= (std::popcount(s & mask) & 1) ? -c : c;
      }
      diag[s] = e;
    }
    return diag;
  }

  for (std::size_t s = 0; s < dim; ++s) {
    double e = 0.0;
    for (const auto& c : instance.couplings) {
      e += (((s >> c.i) ^ (s >> c.j)) & 1U) ? -c.value : c.value;
    }
    for (std::size_t i = 0; i < instance.fields.size(); ++i) {
      e += ((s >> i) & 1U) ? -instance.fields[i] : instance.fields[i];
    }
    diag[s] = e;
  }
  return diag;
}

HamiltonianOperator::HamiltonianOperator(std::shared_ptr<const std::vector<double>> problem_diagonal,
                                         int n_qubits, double lambda)
    : problem_(std::move(problem_diagonal)), n_qubits_(n_qubits), lambda_(lambda) {
  if (!problem_ || problem_->size() != dimension()) {
    throw ShapeError("problem diagonal does not match 2^n_qubits");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("sweep parameter must lie in [0, 1]");
  }
}

std::vector<double> HamiltonianOperator::diagonal() const {
  std::vector<double> out(problem_->size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = lambda_ * (*problem_)[s];
  return out;
}

HamiltonianOperator HamiltonianOperator::at(double lambda) const {
  return HamiltonianOperator(problem_, n_qubits_, lambda);
}

void HamiltonianOperator::apply(std::span<const double> v, std::span<double> out) const {
  const std::size_t dim = dimension();
  if (v.size() != dim || out.size() != dim) throw ShapeError("operator apply: vector length mismatch");
  const double* d = problem_->data();
  const double* in = v.data();
  double* o = out.data();
  const double p = lambda_;
  for (std::size_t s = 0; s < dim; ++s) o[s] = p * d[s] * in[s];

  const double w = -(1.0 - lambda_);
  if (w == 0.0) return;
  // Bit flip on qubit q swaps the two halves of every 2^(q+1) block.
  for (int q = 0; q < n_qubits_; ++q) {
    const std::size_t half = std::size_t{1} << q;
    for (std::size_t block = 0; block < dim; block += 2 * half) {
      double* lo = o + block;
      double* hi = o + block + half;
      const double* vlo = in + block;
      const double* vhi = in + block + half;
      for (std::size_t k = 0; k < half; ++k) {
        lo[k] += w * vhi[k];
        hi[k] += w * vlo[k];
      }
    }
  }
}

Eigen::MatrixXd HamiltonianOperator::to_dense() const {
  const auto dim = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  const double w = -(1.0 - lambda_);
  for (Eigen::Index s = 0; s < dim; ++s) {
    h(s, s) = lambda_ * (*problem_)[s];
    for (int q = 0; q < n_qubits_; ++q) h(s ^ (Eigen::Index{1} << q), s) += w;
  }
  return h;
}

HamiltonianOperator build_operator(const ProblemInstance& instance, double lambda, int qubit_cap) {
  validate(instance);
  const int n = instance.n_qubits();
  if (n > qubit_cap) {
    throw ResourceError("instance needs " + std::to_string(n) + " qubits, cap is " +
                        std::to_string(qubit_cap));
  }
  auto diag = std::make_shared<const std::vector<double>>(problem_diagonal(instance));
  return HamiltonianOperator(std::move(diag), n, lambda);
}

TwoLowest dense_two_lowest(const HamiltonianOperator& op) {
  if (op.n_qubits() > kDenseQubitCap) {
    throw ResourceError("dense diagonalisation is limited to " + std::to_string(kDenseQubitCap) + " qubits");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op.to_dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0.0, op.lambda());
  const auto& ev = solver.eigenvalues();
  return {ev(0), ev(1)};
}

GapTrajectory GapTrajectory::from_gaps(std::vector<double> lambdas, std::vector<double> gaps) {
  if (lambdas.size() != gaps.size()) throw ShapeError("trajectory: lambda and gap lengths differ");
  GapTrajectory t;
  t.lambdas = std::move(lambdas);
  t.gaps = std::move(gaps);
  t.log_gaps.resize(t.gaps.size());
  for (std::size_t k = 0; k < t.gaps.size(); ++k) {
    if (!(t.gaps[k] >= 0.0)) throw InvalidArgument("gaps must be non-negative");
    t.log_gaps[k] = std::log1p(t.gaps[k]);
  }
  return t;
}

double GapTrajectory::min_gap() const {
  if (gaps.empty()) throw InvalidArgument("empty trajectory");
  return *std::min_element(gaps.begin(), gaps.end());
}

GapTrajectory gap_trajectory(const ProblemInstance& instance, const SweepSchedule& schedule,
                             const SolverPolicy& policy) {
  const HamiltonianOperator base = build_operator(instance, 0.0, policy.qubit_cap);
  bool dense = false;
  switch (policy.method) {
    case SolverPolicy::Method::Auto:
      dense = base.n_qubits() <= policy.dense_max_qubits;
      break;
    case SolverPolicy::Method::Dense:
      dense = true;
      break;
    case SolverPolicy::Method::Lanczos:
      dense = false;
      break;
  }

  LanczosOptions options;
  options.tol = policy.tol;
  options.max_iter = policy.max_iter;
  options.seed = policy.seed;

  std::vector<double> gaps;
  gaps.reserve(schedule.values.size());
  LanczosResult previous;
  bool have_previous = false;
  for (double lambda : schedule.values) {
    const HamiltonianOperator op = base.at(lambda);
    TwoLowest pair;
    try {
      if (dense) {
        pair = dense_two_lowest(op);
      } else {
        LanczosResult r = lanczos_two_lowest(op, options, (policy.warm_start && have_previous) ? &previous : nullptr);
        pair = {r.e0, r.e1};
        if (policy.warm_start) {
          previous = std::move(r);
          have_previous = true;
        }
      }
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string(e.what()) + " at lambda=" + std::to_string(lambda), e.residual(), lambda);
    }
    gaps.push_back(std::max(0.0, pair.e1 - pair.e0));
  }
  return GapTrajectory::from_gaps(schedule.values, std::move(gaps));
}

std::vector<std::vector<double>> min_gap_scan(const ProblemInstance& instance, std::size_t coupling_a,
                                              std::size_t coupling_b, std::span<const double> values_a,
                                              std::span<const double> values_b,
                                              const SweepSchedule& schedule, const SolverPolicy& policy) {
  if (coupling_a >= instance.couplings.size() || coupling_b >= instance.couplings.size()) {
    throw InvalidArgument("coupling index out of range");
  }
  if (coupling_a == coupling_b) throw InvalidArgument("min_gap_scan needs two distinct couplings");
  std::vector<std::vector<double>> landscape(values_a.size(), std::vector<double>(values_b.size()));
  ProblemInstance work = instance;
  for (std::size_t r = 0; r < values_a.size(); ++r) {
    for (std::size_t c = 0; c < values_b.size(); ++c) {
      work.couplings[coupling_a].value = values_a[r];
      work.couplings[coupling_b].value = values_b[c];
      landscape[r][c] = gap_trajectory(work, schedule, policy).min_gap();
    }
  }
  return landscape;
}

std::size_t Histogram::total() const {
  std::size_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

Histogram make_histogram(std::span<const double> values, int bins, double lo, double hi) {
  if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
  if (!(hi > lo)) throw InvalidArgument("histogram range must satisfy hi > lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  const double width = h.bin_width();
  for (double v : values) {
    auto bin = static_cast<long long>(std::floor((v - lo) / width));
    bin = std::clamp<long long>(bin, 0, bins - 1);
    ++h.counts[bin];
  }
  return h;
}

Histogram gap_histogram(std::span<const GapTrajectory> trajectories, int bins, double lo, double hi) {
  if (trajectories.empty()) throw InvalidArgument("gap histogram needs at least one trajectory");
  std::vector<double> pooled;
  for (const auto& t : trajectories) pooled.insert(pooled.end(), t.gaps.begin(), t.gaps.end());
  if (!(hi > lo)) {
    lo = 0.0;
    hi = *std::max_element(pooled.begin(), pooled.end());
    if (!(hi > lo)) hi = 1.0;
  }
  return make_histogram(pooled, bins, lo, hi);
}

Histogram gap_histogram(std::span<const ProblemInstance> instances, const SweepSchedule& schedule, int bins,
                        double lo, double hi, const SolverPolicy& policy) {
  if (instances.empty()) throw InvalidArgument("gap histogram needs at least one instance");
  std::vector<GapTrajectory> trajectories;
  trajectories.reserve(instances.size());
  for (const auto& instance : instances) trajectories.push_back(gap_trajectory(instance, schedule, policy));
  return gap_histogram(std::span<const GapTrajectory>(trajectories), bins, lo, hi);
}

}  // namespace gapnet
