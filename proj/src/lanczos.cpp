#include <algorithm>
#include <cmath>
#include <sstream>

#include "gapnet/errors.hpp"
#include "gapnet/rng.hpp"
#include "gapnet/spectrum.hpp"

namespace gapnet {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Bytes the Krylov basis may occupy before the restart length is shortened.
constexpr double kBasisBudgetBytes = 1.0 * (1ULL << 30);
constexpr double kWarmStartNoise = 0.1;
constexpr double kBreakdown = 1e-10;

VectorXd random_unit(Rng& rng, Index dim) {
  VectorXd v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = rng.uniform(-1.0, 1.0);
  v.normalize();
  return v;
}

// Classical Gram-Schmidt applied twice against the first m columns of basis;
// returns the accumulated projection coefficients.
VectorXd orthogonalize(const MatrixXd& basis, Index m, VectorXd& w) {
  if (m == 0) return VectorXd();
  VectorXd h = basis.leftCols(m).transpose() * w;
  w.noalias() -= basis.leftCols(m) * h;
  VectorXd h2 = basis.leftCols(m).transpose() * w;
  w.noalias() -= basis.leftCols(m) * h2;
  return h + h2;
}

class BlockKrylov {
 public:
  BlockKrylov(const HamiltonianOperator& op, const LanczosOptions& options)
      : op_(op), options_(options), rng_(options.seed, stream_tag::kSolver) {
    dim_ = static_cast<Index>(op.dimension());
    const auto budget_cols = static_cast<Index>(kBasisBudgetBytes / (8.0 * static_cast<double>(dim_)));
    cap_ = std::min<Index>({static_cast<Index>(std::max(options.restart_length, 4)), dim_,
                            std::max<Index>(budget_cols, 4)});
    basis_.resize(dim_, cap_);
    projected_ = MatrixXd::Zero(cap_ + 1, cap_);
    work_.resize(dim_);
  }

  LanczosResult solve(const LanczosResult* warm) {
    VectorXd b0;
    VectorXd b1;
    if (warm != nullptr && static_cast<Index>(warm->ground.size()) == dim_ &&
        static_cast<Index>(warm->excited.size()) == dim_) {
      b0 = Eigen::Map<const VectorXd>(warm->ground.data(), dim_) + kWarmStartNoise * random_unit(rng_, dim_);
      b1 = Eigen::Map<const VectorXd>(warm->excited.data(), dim_) + kWarmStartNoise * random_unit(rng_, dim_);
    } else {
      b0 = random_unit(rng_, dim_);
      b1 = random_unit(rng_, dim_);
    }

    const double target = options_.tol / 4.0;
    double residual = std::numeric_limits<double>::infinity();
    for (;;) {
      reset(b0, b1);
      Index applied = 0;
      RitzPair ritz;
      while (applied < size_) {
        // Only expand while the new direction still fits; otherwise restart.
        if (size_ == cap_ && size_ < dim_) break;
        if (iterations_ >= options_.max_iter) {
          std::ostringstream msg;
          msg << "block Lanczos did not converge in " << options_.max_iter << " iterations (residual "
              << residual << ")";
          throw ConvergenceError(msg.str(), residual, op_.lambda());
        }
        expand(applied);
        ++applied;
        if (applied < 2) continue;
        ritz = rayleigh_ritz(applied);
        residual = std::max(ritz.residual0, ritz.residual1);
        const bool exhausted = size_ == dim_ && applied == size_;
        if (residual <= target || exhausted) return finish(ritz, applied, residual);
      }
      if (applied < 2) throw ConvergenceError("Krylov basis too small to restart", residual, op_.lambda());
      // Restart from the current Ritz pair.
      b0 = basis_.leftCols(applied) * ritz.y0;
      b1 = basis_.leftCols(applied) * ritz.y1;
    }
  }

 private:
  struct RitzPair {
    double theta0 = 0.0;
    double theta1 = 0.0;
    VectorXd y0;
    VectorXd y1;
    double residual0 = 0.0;
    double residual1 = 0.0;
  };

  void reset(VectorXd b0, VectorXd b1) {
    size_ = 0;
    projected_.setZero();
    append(std::move(b0));
    append(std::move(b1));
  }

  // Adds a direction orthonormal to the basis, substituting a random one if
  // the candidate is numerically dependent.
  void append(VectorXd v) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      orthogonalize(basis_, size_, v);
      const double norm = v.norm();
      if (norm > 1e-8) {
        basis_.col(size_) = v / norm;
        ++size_;
        return;
      }
      v = random_unit(rng_, dim_);
    }
    throw ConvergenceError("could not extend the Krylov basis", 0.0, op_.lambda());
  }

  // Applies H to basis vector k and records its expansion coefficients.
  void expand(Index k) {
    op_.apply(std::span<const double>(basis_.col(k).data(), dim_), std::span<double>(work_.data(), dim_));
    ++iterations_;
    const double scale = std::max(1.0, work_.norm());
    VectorXd h = orthogonalize(basis_, size_, work_);
    projected_.col(k).head(size_) = h;
    if (size_ == dim_) return;
    const double beta = work_.norm();
    if (beta > kBreakdown * scale) {
      projected_(size_, k) = beta;
      basis_.col(size_) = work_ / beta;
      ++size_;
    } else {
      // Invariant block found: keep exploring from a fresh direction.
      append(random_unit(rng_, dim_));
    }
  }

  RitzPair rayleigh_ritz(Index applied) const {
    MatrixXd a = projected_.topLeftCorner(applied, applied);
    a = 0.5 * (a + a.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
    RitzPair r;
    r.theta0 = eig.eigenvalues()(0);
    r.theta1 = eig.eigenvalues()(1);
    r.y0 = eig.eigenvectors().col(0);
    r.y1 = eig.eigenvectors().col(1);
    const Index tail = std::min<Index>(size_, projected_.rows()) - applied;
    if (tail > 0) {
      const auto coupling = projected_.block(applied, 0, tail, applied);
      r.residual0 = (coupling * r.y0).norm();
      r.residual1 = (coupling * r.y1).norm();
    }
    return r;
  }

  LanczosResult finish(const RitzPair& ritz, Index applied, double residual) const {
    LanczosResult out;
    out.e0 = ritz.theta0;
    out.e1 = ritz.theta1;
    out.iterations = iterations_;
    out.residual = residual;
    VectorXd x0 = basis_.leftCols(applied) * ritz.y0;
    VectorXd x1 = basis_.leftCols(applied) * ritz.y1;
    x0.normalize();
    x1.normalize();
    out.ground.assign(x0.data(), x0.data() + dim_);
    out.excited.assign(x1.data(), x1.data() + dim_);
    return out;
  }

  const HamiltonianOperator& op_;
  LanczosOptions options_;
  Rng rng_;
  Index dim_ = 0;
  Index cap_ = 0;
  Index size_ = 0;
  int iterations_ = 0;
  MatrixXd basis_;
  MatrixXd projected_;
  VectorXd work_;
};

}  // namespace

LanczosResult lanczos_two_lowest(const HamiltonianOperator& op, const LanczosOptions& options,
                                 const LanczosResult* warm) {
  if (op.n_qubits() < 1) throw InvalidArgument("Lanczos needs at least one qubit");
  if (!(options.tol > 0.0)) throw InvalidArgument("Lanczos tolerance must be positive");
  BlockKrylov solver(op, options);
  return solver.solve(warm);
}

TwoLowest lanczos_two_lowest(const HamiltonianOperator& op, double tol, int max_iter) {
  LanczosOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  const LanczosResult r = lanczos_two_lowest(op, options);
  return {r.e0, r.e1};
}

}  // namespace gapnet
