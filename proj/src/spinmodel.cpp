#include "gapnet/spinmodel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gapnet/errors.hpp"
#include "gapnet/rng.hpp"

namespace gapnet {

namespace {

void require_size(int size) {
  if (size < 2) {
    throw SizeError("problem size must be at least 2, got " + std::to_string(size));
  }
}

inline double spin(std::uint64_t state, int qubit) {
  return ((state >> qubit) & 1U) ? -1.0 : 1.0;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::NearestNeighbor1D:
      return "nn1d";
    case Family::AllToAll:
      return "all_to_all";
    case Family::LhzPhysical:
      return "lhz";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "nn1d" || name == "nn" || name == "nearest_neighbor") return Family::NearestNeighbor1D;
  if (name == "all_to_all" || name == "a2a") return Family::AllToAll;
  if (name == "lhz") return Family::LhzPhysical;
  throw InvalidArgument("unknown model family '" + std::string(name) + "'");
}

int ProblemInstance::n_qubits() const {
  if (family == Family::LhzPhysical) return static_cast<int>(couplings.size());
  return size;
}

void validate(const ProblemInstance& instance) {
  require_size(instance.size);
  const int m = instance.size;
  auto fail = [&](const std::string& what) {
    throw InvalidArgument(std::string(to_string(instance.family)) + " instance (M=" +
                          std::to_string(m) + "): " + what);
  };

  if (instance.family != Family::LhzPhysical) {
    if (!instance.fields.empty() && static_cast<int>(instance.fields.size()) != m) {
      fail("expected " + std::to_string(m) + " fields");
    }
    if (!instance.plaquettes.empty()) fail("plaquettes are only valid for the LHZ model");
  }

  switch (instance.family) {
    case Family::NearestNeighbor1D: {
      if (static_cast<int>(instance.couplings.size()) != m - 1) fail("expected M-1 couplings");
      for (int k = 0; k < m - 1; ++k) {
        const auto& c = instance.couplings[k];
        if (c.i != k || c.j != k + 1) fail("couplings must be (k, k+1) in order");
      }
      break;
    }
    case Family::AllToAll: {
      if (static_cast<int>(instance.couplings.size()) != m * (m - 1) / 2) {
        fail("expected M(M-1)/2 couplings");
      }
      std::size_t k = 0;
      for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j, ++k) {
          if (instance.couplings[k].i != i || instance.couplings[k].j != j) {
            fail("couplings must cover every pair i<j in lexicographic order");
          }
        }
      }
      break;
    }
    case Family::LhzPhysical: {
      if (!instance.fields.empty()) fail("fields are absorbed into physical qubits");
      if (instance.constraint_strength < 0.0) fail("constraint strength must be non-negative");
      const int n = instance.n_qubits();
      std::set<std::pair<int, int>> seen;
      for (const auto& c : instance.couplings) {
        if (c.i < 0 || c.j <= c.i || c.j > m) fail("physical qubit labels must satisfy 0 <= i < j <= M");
        if (!seen.insert({c.i, c.j}).second) fail("duplicate physical qubit label");
      }
      for (const auto& p : instance.plaquettes) {
        if (p.arity != 3 && p.arity != 4) fail("plaquettes must have 3 or 4 qubits");
        std::set<int> members;
        for (int q : p.members()) {
          if (q < 0 || q >= n) fail("plaquette index out of range");
          members.insert(q);
        }
        if (static_cast<int>(members.size()) != p.arity) fail("plaquette indices must be distinct");
      }
      break;
    }
  }
}

double classical_energy(const ProblemInstance& instance, std::uint64_t state) {
  double energy = 0.0;
  if (instance.family == Family::LhzPhysical) {
    for (std::size_t k = 0; k < instance.couplings.size(); ++k) {
      energy += instance.couplings[k].value * spin(state, static_cast<int>(k));
    }
    for (const auto& p : instance.plaquettes) {
      double product = 1.0;
      for (int q : p.members()) product *= spin(state, q);
      energy -= instance.constraint_strength * product;
    }
    return energy;
  }
  for (const auto& c : instance.couplings) energy += c.value * spin(state, c.i) * spin(state, c.j);
  for (std::size_t i = 0; i < instance.fields.size(); ++i) {
    energy += instance.fields[i] * spin(state, static_cast<int>(i));
  }
  return energy;
}

SweepSchedule make_schedule(int n_steps) {
  if (n_steps < 2) {
    throw InvalidArgument("sweep schedule needs at least 2 points, got " + std::to_string(n_steps));
  }
  SweepSchedule schedule;
  schedule.values.resize(n_steps);
  const double last = static_cast<double>(n_steps - 1);
  for (int k = 0; k < n_steps; ++k) schedule.values[k] = static_cast<double>(k) / last;
  schedule.values.back() = 1.0;
  return schedule;
}

ProblemInstance sample_instance(Family family, int size, std::uint64_t seed) {
  require_size(size);
  if (family == Family::LhzPhysical) {
    throw InvalidArgument("sample an all-to-all instance and encode it with lhz_encode instead");
  }
  Rng rng(seed);
  ProblemInstance instance;
  instance.family = family;
  instance.size = size;
  instance.seed = seed;
  if (family == Family::NearestNeighbor1D) {
    instance.couplings.reserve(size - 1);
    for (int i = 0; i + 1 < size; ++i) instance.couplings.push_back({i, i + 1, rng.uniform(-1.0, 1.0)});
  } else {
    instance.couplings.reserve(size * (size - 1) / 2);
    for (int i = 0; i < size; ++i) {
      for (int j = i + 1; j < size; ++j) instance.couplings.push_back({i, j, rng.uniform(-1.0, 1.0)});
    }
  }
  instance.fields.resize(size);
  for (auto& k : instance.fields) k = rng.uniform(-1.0, 1.0);
  return instance;
}

int parameter_count(Family family, int size) {
  require_size(size);
  switch (family) {
    case Family::NearestNeighbor1D:
      return 2 * size - 1;
    case Family::AllToAll:
      return size * (size + 1) / 2;
    case Family::LhzPhysical:
      return lhz_physical_count(size, true);
  }
  return 0;
}

std::vector<double> parameter_vector(const ProblemInstance& instance) {
  std::vector<double> out;
  out.reserve(instance.couplings.size() + instance.fields.size());
  for (const auto& c : instance.couplings) out.push_back(c.value);
  out.insert(out.end(), instance.fields.begin(), instance.fields.end());
  return out;
}

int lhz_physical_count(int size, bool with_fields) {
  require_size(size);
  return size * (size - 1) / 2 + (with_fields ? size : 0);
}

std::pair<int, int> lhz_grid_position(int i, int j) { return {i, j - 1}; }

int lhz_grid_extent(const ProblemInstance& lhz_instance) {
  int extent = 0;
  for (const auto& c : lhz_instance.couplings) extent = std::max(extent, c.j);
  return extent;
}

double default_constraint_strength(const ProblemInstance& all_to_all) {
  double largest = 0.0;
  for (const auto& c : all_to_all.couplings) largest = std::max(largest, std::abs(c.value));
  for (double k : all_to_all.fields) largest = std::max(largest, std::abs(k));
  return 2.0 * largest * all_to_all.size;
}

LhzResult lhz_encode(const ProblemInstance& all_to_all, std::optional<double> constraint_strength) {
  if (all_to_all.family != Family::AllToAll) {
    throw InvalidArgument("LHZ encoding expects an all-to-all instance");
  }
  validate(all_to_all);
  const double strength = constraint_strength.value_or(default_constraint_strength(all_to_all));
  if (strength < 0.0) throw InvalidArgument("constraint strength must be non-negative");

  const int m = all_to_all.size;
  const bool with_fields = !all_to_all.fields.empty();
  const int extended = m + (with_fields ? 1 : 0);

  LhzEncoding encoding;
  encoding.logical_size = m;
  encoding.with_fields = with_fields;

  std::vector<std::vector<int>> index(extended, std::vector<int>(extended, -1));
  std::size_t logical_pair = 0;
  for (int i = 0; i < extended; ++i) {
    for (int j = i + 1; j < extended; ++j) {
      index[i][j] = encoding.n_physical();
      encoding.pairs.emplace_back(i, j);
      // Logical couplings are stored in the same lexicographic order, and the
      // auxiliary index m sorts after every real spin.
      if (j < m) {
        encoding.physical_fields.push_back(all_to_all.couplings[logical_pair++].value);
      } else {
        encoding.physical_fields.push_back(all_to_all.fields[i]);
      }
    }
  }

  for (int i = 0; i + 2 < extended; ++i) {
    for (int j = i + 1; j + 1 < extended; ++j) {
      Plaquette p;
      if (j == i + 1) {
        p.qubits = {index[i][i + 1], index[i + 1][i + 2], index[i][i + 2], -1};
        p.arity = 3;
      } else {
        p.qubits = {index[i][j], index[i + 1][j + 1], index[i][j + 1], index[i + 1][j]};
        p.arity = 4;
      }
      encoding.plaquettes.push_back(p);
    }
  }

  ProblemInstance physical;
  physical.family = Family::LhzPhysical;
  physical.size = m;
  physical.seed = all_to_all.seed;
  physical.constraint_strength = strength;
  physical.plaquettes = encoding.plaquettes;
  physical.couplings.reserve(encoding.pairs.size());
  for (std::size_t k = 0; k < encoding.pairs.size(); ++k) {
    physical.couplings.push_back({encoding.pairs[k].first, encoding.pairs[k].second, encoding.physical_fields[k]});
  }
  return {std::move(physical), std::move(encoding)};
}

}  // namespace gapnet
