#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "gapnet/errors.hpp"
#include "gapnet/spectrum.hpp"
#include "gapnet/spinmodel.hpp"
#include "oracles.hpp"

using namespace gapnet;

TEST_CASE("sampler: coupling and field counts per family") {
  const auto a2a = sample_instance(Family::AllToAll, 5, 7);
  CHECK(a2a.couplings.size() == 10);
  CHECK(a2a.fields.size() == 5);
  const auto chain = sample_instance(Family::NearestNeighbor1D, 10, 7);
  CHECK(chain.couplings.size() == 9);
  CHECK(chain.fields.size() == 10);
  for (const auto& c : chain.couplings) CHECK(c.j == c.i + 1);
  for (const auto& c : a2a.couplings) CHECK(c.i < c.j);
}

TEST_CASE("sampler: same seed gives identical instances, different seeds differ") {
  CHECK(sample_instance(Family::NearestNeighbor1D, 3, 42) == sample_instance(Family::NearestNeighbor1D, 3, 42));
  CHECK_FALSE(sample_instance(Family::NearestNeighbor1D, 3, 42) == sample_instance(Family::NearestNeighbor1D, 3, 43));
}

TEST_CASE("sampler: rejects bad sizes and direct LHZ sampling") {
  CHECK_THROWS_AS(sample_instance(Family::NearestNeighbor1D, 1, 0), SizeError);
  CHECK_THROWS_AS(sample_instance(Family::LhzPhysical, 4, 0), InvalidArgument);
}

TEST_CASE("sampler marginals: support in [-1, 1] and mean within 3 sigma of 0") {
  const int draws = 100000;
  double sum = 0.0;
  double lo = 1.0;
  double hi = -1.0;
  for (int s = 0; s < draws; ++s) {
    const auto inst = sample_instance(Family::NearestNeighbor1D, 2, static_cast<std::uint64_t>(s));
    const double j = inst.couplings[0].value;
    sum += j;
    lo = std::min(lo, j);
    hi = std::max(hi, j);
    CHECK_FALSE(std::abs(inst.fields[0]) > 1.0);
  }
  CHECK(lo >= -1.0);
  CHECK(hi <= 1.0);
  const double sigma = std::sqrt(1.0 / 3.0 / draws);
  CHECK(std::abs(sum / draws) < 3.0 * sigma);
}

TEST_CASE("schedule: uniform grid on [0, 1]") {
  CHECK(make_schedule(2).values == std::vector<double>{0.0, 1.0});
  const auto s = make_schedule();
  REQUIRE(s.n_steps() == 50);
  CHECK(s.values.front() == 0.0);
  CHECK(s.values.back() == 1.0);
  CHECK(s.values[1] == doctest::Approx(1.0 / 49.0).epsilon(1e-15));
  for (int k = 1; k < s.n_steps(); ++k) CHECK(s.values[k] - s.values[k - 1] == doctest::Approx(1.0 / 49.0));
  CHECK_THROWS_AS(make_schedule(1), InvalidArgument);
}

TEST_CASE("parameter counts") {
  CHECK(parameter_count(Family::AllToAll, 5) == 15);
  CHECK(parameter_count(Family::NearestNeighbor1D, 10) == 19);
  CHECK(parameter_vector(sample_instance(Family::AllToAll, 5, 1)).size() == 15);
  CHECK(parameter_vector(sample_instance(Family::NearestNeighbor1D, 3, 1)).size() == 5);
}

TEST_CASE("lhz: physical qubit and constraint counts") {
  CHECK(lhz_physical_count(5, true) == 15);
  CHECK(lhz_physical_count(6, true) == 21);
  CHECK(lhz_physical_count(3, false) == 3);

  auto logical = sample_instance(Family::AllToAll, 3, 5);
  logical.fields.clear();
  const auto bare = lhz_encode(logical);
  CHECK(bare.encoding.n_physical() == 3);
  CHECK(bare.encoding.n_constraints() == 1);
  CHECK(bare.encoding.plaquettes.front().arity == 3);

  for (int m = 3; m <= 6; ++m) {
    auto inst = sample_instance(Family::AllToAll, m, 11);
    inst.fields.clear();
    const auto r = lhz_encode(inst);
    CHECK(r.encoding.n_constraints() == r.encoding.n_physical() - m + 1);
  }
}

TEST_CASE("lhz: plaquettes reference distinct in-range qubits") {
  for (int m = 3; m <= 7; ++m) {
    const auto r = lhz_encode(sample_instance(Family::AllToAll, m, 3));
    validate(r.physical);
    for (const auto& p : r.encoding.plaquettes) {
      CHECK((p.arity == 3 || p.arity == 4));
      std::set<int> seen(p.members().begin(), p.members().end());
      CHECK(seen.size() == static_cast<std::size_t>(p.arity));
      for (int q : p.members()) CHECK((q >= 0 && q < r.encoding.n_physical()));
    }
  }
}

TEST_CASE("lhz: encoding is deterministic and injective") {
  const auto a = sample_instance(Family::AllToAll, 4, 1);
  const auto b = sample_instance(Family::AllToAll, 4, 2);
  CHECK(lhz_encode(a).physical == lhz_encode(a).physical);
  CHECK_FALSE(lhz_encode(a).physical == lhz_encode(b).physical);
}

TEST_CASE("lhz: constraint-satisfying states reproduce the logical spectrum") {
  for (int m = 3; m <= 5; ++m) {
    const auto logical = sample_instance(Family::AllToAll, m, 100 + m);
    const auto r = lhz_encode(logical);
    const auto& enc = r.encoding;
    const double offset = -r.physical.constraint_strength * enc.n_constraints();
    std::vector<double> sector;
    for (std::uint64_t s = 0; s < (1ULL << enc.n_physical()); ++s) {
      bool ok = true;
      for (const auto& p : enc.plaquettes) {
        double prod = 1.0;
        for (int q : p.members()) prod *= oracle::spin_of(s, q);
        ok = ok && prod > 0.0;
      }
      if (!ok) continue;
      // Recover the logical configuration (auxiliary spin fixed to +1).
      std::uint64_t z = 0;
      for (int i = 0; i < m; ++i) {
        const int k = static_cast<int>(std::find(enc.pairs.begin(), enc.pairs.end(), std::pair{i, m}) - enc.pairs.begin());
        if (oracle::spin_of(s, k) < 0) z |= 1ULL << i;
      }
      for (int k = 0; k < enc.n_physical(); ++k) {
        const auto [i, j] = enc.pairs[k];
        const double zi = oracle::spin_of(z, i);
        const double zj = j == m ? 1.0 : oracle::spin_of(z, j);
        CHECK(oracle::spin_of(s, k) == zi * zj);
      }
      sector.push_back(classical_energy(r.physical, s) - offset);
    }
    std::sort(sector.begin(), sector.end());
    const auto expected = oracle::logical_energies(logical);
    REQUIRE(sector.size() == expected.size());
    for (std::size_t k = 0; k < sector.size(); ++k) CHECK(sector[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  }
}

TEST_CASE("lhz: default constraint strength keeps the two lowest levels logical") {
  for (int m = 3; m <= 5; ++m) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto logical = sample_instance(Family::AllToAll, m, 900 + seed);
      const auto r = lhz_encode(logical);
      const double offset = -r.physical.constraint_strength * r.encoding.n_constraints();
      const auto physical = oracle::sorted_diagonal(problem_diagonal(r.physical));
      const auto expected = oracle::logical_energies(logical);
      CHECK(physical[0] - offset == doctest::Approx(expected[0]).epsilon(1e-12));
      CHECK(physical[1] - offset == doctest::Approx(expected[1]).epsilon(1e-12));
    }
  }
}

TEST_CASE("lhz: grid positions fill the square of extent M") {
  const auto r = lhz_encode(sample_instance(Family::AllToAll, 5, 2));
  CHECK(lhz_grid_extent(r.physical) == 5);
  std::set<std::pair<int, int>> cells;
  for (const auto& [i, j] : r.encoding.pairs) cells.insert(lhz_grid_position(i, j));
  CHECK(cells.size() == 15);
}

TEST_CASE("validate rejects malformed instances") {
  auto inst = sample_instance(Family::NearestNeighbor1D, 4, 1);
  inst.couplings[1].j = 3;
  CHECK_THROWS_AS(validate(inst), InvalidArgument);
  auto a2a = sample_instance(Family::AllToAll, 4, 1);
  a2a.couplings.pop_back();
  CHECK_THROWS_AS(validate(a2a), InvalidArgument);
}
