#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gapnet {

enum class Family { NearestNeighbor1D, AllToAll, LhzPhysical };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

// One two-body term J * z_i * z_j with i < j.
//
// For LhzPhysical instances the same record describes a physical qubit: (i, j)
// is the logical pair it stands for and value is its local field J_k. A pair
// with j == size is the auxiliary pair carrying the logical field K_i.
struct Coupling {
  int i = 0;
  int j = 0;
  double value = 0.0;

  bool operator==(const Coupling&) const = default;
};

struct Plaquette {
  std::array<int, 4> qubits{-1, -1, -1, -1};
  int arity = 0;  // 3 on the bottom row, 4 elsewhere

  std::span<const int> members() const { return {qubits.data(), static_cast<std::size_t>(arity)}; }
  bool operator==(const Plaquette&) const = default;
};

struct ProblemInstance {
  Family family = Family::NearestNeighbor1D;
  int size = 0;  // logical M
  std::vector<Coupling> couplings;
  std::vector<double> fields;  // K_i; empty for LhzPhysical
  double constraint_strength = 0.0;  // C, LhzPhysical only
  std::vector<Plaquette> plaquettes;  // LhzPhysical only
  std::uint64_t seed = 0;

  // Number of spins the Hamiltonian acts on: M for logical models, N_p for LHZ.
  int n_qubits() const;

  bool operator==(const ProblemInstance&) const = default;
};

// Throws InvalidArgument if the family invariants do not hold.
void validate(const ProblemInstance& instance);

// Classical energy of H_p for a basis state; bit q of `state` set means z_q = -1.
double classical_energy(const ProblemInstance& instance, std::uint64_t state);

inline constexpr int kDefaultSweepSteps = 50;

// Uniform grid lambda_k = k / (n_steps - 1). The gap depends on lambda only,
// so the physical sweep time never appears.
struct SweepSchedule {
  std::vector<double> values;

  int n_steps() const { return static_cast<int>(values.size()); }
  bool operator==(const SweepSchedule&) const = default;
};

SweepSchedule make_schedule(int n_steps = kDefaultSweepSteps);

// Couplings and fields drawn i.i.d. from U[-1, 1); couplings first in
// lexicographic (i, j) order, then fields by site. Equal seeds give equal
// instances on every platform.
ProblemInstance sample_instance(Family family, int size, std::uint64_t seed);

// Number of coefficients that identify H_p: 2M-1 for the chain, M(M+1)/2 for
// the all-to-all model, and N_p (fields included) for the LHZ model.
int parameter_count(Family family, int size);

// Coefficients in network-input order: couplings in stored (lexicographic)
// order followed by fields.
std::vector<double> parameter_vector(const ProblemInstance& instance);

struct LhzEncoding {
  int logical_size = 0;
  bool with_fields = false;
  // Logical pair behind each physical qubit, ordered lexicographically over
  // the extended logical index set {0..M} (M being the fixed auxiliary spin).
  std::vector<std::pair<int, int>> pairs;
  std::vector<Plaquette> plaquettes;
  std::vector<double> physical_fields;

  int n_physical() const { return static_cast<int>(pairs.size()); }
  int n_constraints() const { return static_cast<int>(plaquettes.size()); }
};

// Physical qubits for M logical spins: M(M-1)/2, plus M with local fields.
int lhz_physical_count(int size, bool with_fields);

// Layout of the parity qubit (i, j) on a square grid: row i, column j-1.
// Every plaquette then occupies one 2x2 window (the three-body ones miss the
// sub-diagonal corner), so the pyramid fits an extent x extent square.
std::pair<int, int> lhz_grid_position(int i, int j);
int lhz_grid_extent(const ProblemInstance& lhz_instance);

// Default constraint strength 2 * max_k |J_k| * M.
double default_constraint_strength(const ProblemInstance& all_to_all);

struct LhzResult {
  ProblemInstance physical;
  LhzEncoding encoding;
};

// Encodes an all-to-all instance into the parity (LHZ) model
//   H = sum_k J_k z_k - C * sum_plaquettes prod z.
// The logical fields are carried by parity qubits paired with an auxiliary
// spin fixed to +1, which is eliminated rather than simulated.
LhzResult lhz_encode(const ProblemInstance& all_to_all,
                     std::optional<double> constraint_strength = std::nullopt);

}  // namespace gapnet
