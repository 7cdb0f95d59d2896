#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gapnet/spinmodel.hpp"

namespace gapnet {

inline constexpr int kDefaultQubitCap = 24;
inline constexpr int kDenseQubitCap = 12;

// Problem energies E_p(s) for all 2^n basis states, computed in one pass.
// Basis state s has z_q = +1 when bit q of s is clear.
std::vector<double> problem_diagonal(const ProblemInstance& instance);

// H(lambda) = -(1 - lambda) * sum_q X_q + lambda * diag(E_p), applied without
// ever forming the matrix. Copies share the problem diagonal.
class HamiltonianOperator {
 public:
  HamiltonianOperator(std::shared_ptr<const std::vector<double>> problem_diagonal, int n_qubits,
                      double lambda);

  int n_qubits() const { return n_qubits_; }
  std::size_t dimension() const { return std::size_t{1} << n_qubits_; }
  double lambda() const { return lambda_; }
  double driver_weight() const { return 1.0 - lambda_; }
  double problem_weight() const { return lambda_; }

  // Diagonal of the full operator, lambda * E_p.
  std::vector<double> diagonal() const;
  const std::vector<double>& problem_diagonal() const { return *problem_; }

  // Same instance at another sweep point.
  HamiltonianOperator at(double lambda) const;

  // out = H v. Spans must have length dimension() and must not alias.
  void apply(std::span<const double> v, std::span<double> out) const;

  Eigen::MatrixXd to_dense() const;

 private:
  std::shared_ptr<const std::vector<double>> problem_;
  int n_qubits_;
  double lambda_;
};

HamiltonianOperator build_operator(const ProblemInstance& instance, double lambda,
                                   int qubit_cap = kDefaultQubitCap);

struct TwoLowest {
  double e0 = 0.0;
  double e1 = 0.0;

  double gap() const { return e1 - e0; }
};

// Full symmetric eigendecomposition; the reference for everything else.
TwoLowest dense_two_lowest(const HamiltonianOperator& op);

struct LanczosOptions {
  double tol = 1e-8;  // absolute accuracy on both eigenvalues
  int max_iter = 4000;  // operator applications
  int restart_length = 96;  // Krylov basis size before a restart
  std::uint64_t seed = 0x9e3779b9ULL;
};

struct LanczosResult {
  double e0 = 0.0;
  double e1 = 0.0;
  std::vector<double> ground;
  std::vector<double> excited;
  int iterations = 0;
  double residual = 0.0;  // largest residual norm of the two Ritz pairs
};

// Two smallest eigenvalues counting multiplicity.
//
// Block Krylov iteration with block size two and full reorthogonalisation, so
// a degenerate (or nearly degenerate) lowest pair is resolved instead of being
// collapsed onto one Ritz vector. Converged when both Ritz residuals are below
// tol / 4. With `warm` the starting block is the previous pair of Ritz vectors
// mixed with seeded random vectors, which keeps every symmetry sector reachable.
LanczosResult lanczos_two_lowest(const HamiltonianOperator& op, const LanczosOptions& options = {},
                                 const LanczosResult* warm = nullptr);

TwoLowest lanczos_two_lowest(const HamiltonianOperator& op, double tol, int max_iter);

struct SolverPolicy {
  enum class Method { Auto, Dense, Lanczos };

  Method method = Method::Auto;
  int dense_max_qubits = 8;  // Auto: dense up to this size, Lanczos above
  int qubit_cap = kDefaultQubitCap;
  double tol = 1e-8;
  int max_iter = 4000;
  bool warm_start = true;
  std::uint64_t seed = 0x9e3779b9ULL;
};

struct GapTrajectory {
  std::vector<double> lambdas;
  std::vector<double> gaps;
  std::vector<double> log_gaps;  // log1p(gaps)

  static GapTrajectory from_gaps(std::vector<double> lambdas, std::vector<double> gaps);
  int n_steps() const { return static_cast<int>(gaps.size()); }
  double min_gap() const;
  bool operator==(const GapTrajectory&) const = default;
};

// g(lambda_k) = E1 - E0 on every grid point (clamped at zero against
// round-off). Solver failures are rethrown with the failing lambda attached.
GapTrajectory gap_trajectory(const ProblemInstance& instance, const SweepSchedule& schedule,
                             const SolverPolicy& policy = {});

// Minimum gap over the sweep with couplings a and b overridden by every pair
// (values_a[r], values_b[c]); result[r][c].
std::vector<std::vector<double>> min_gap_scan(const ProblemInstance& instance, std::size_t coupling_a,
                                              std::size_t coupling_b, std::span<const double> values_a,
                                              std::span<const double> values_b,
                                              const SweepSchedule& schedule, const SolverPolicy& policy = {});

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  std::size_t total() const;
};

// Fixed-width bins over [lo, hi]; values outside the range land in the edge
// bins so nothing is dropped.
Histogram make_histogram(std::span<const double> values, int bins, double lo, double hi);

// Pools every g(lambda_k) of every instance. hi <= lo selects [0, max gap].
Histogram gap_histogram(std::span<const ProblemInstance> instances, const SweepSchedule& schedule, int bins,
                        double lo = 0.0, double hi = 0.0, const SolverPolicy& policy = {});

Histogram gap_histogram(std::span<const GapTrajectory> trajectories, int bins, double lo = 0.0,
                        double hi = 0.0);

}  // namespace gapnet
