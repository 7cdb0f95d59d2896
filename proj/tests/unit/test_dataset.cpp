#include <cmath>
#include <filesystem>
#include <set>
#include <fstream>

#include "doctest.h"
#include "gapnet/dataset.hpp"
#include "gapnet/errors.hpp"
#include "test_paths.hpp"

using namespace gapnet;
namespace fs = std::filesystem;

namespace {

Sample make_sample(Family family, int m, std::uint64_t seed, int steps = 10) {
  Sample s;
  s.id = seed;
  if (family == Family::LhzPhysical) {
    s.instance = lhz_encode(sample_instance(Family::AllToAll, m, seed)).physical;
  } else {
    s.instance = sample_instance(family, m, seed);
  }
  s.trajectory = gap_trajectory(s.instance, make_schedule(steps));
  s.placement_seed = derive_seed(seed, stream_tag::kPlacement);
  return s;
}

// Reads (K, J_left, J_right) back out of a chain grid at lambda = 1.
ProblemInstance decode_chain(const Tensor& grid, int steps) {
  ProblemInstance inst;
  inst.family = Family::NearestNeighbor1D;
  const int width = grid.shape[1];
  std::vector<int> sites;
  for (int x = 0; x < width; ++x) {
    if (grid.at(steps - 1, x, 3) == 1.0) sites.push_back(x);
  }
  inst.size = static_cast<int>(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    inst.fields.push_back(grid.at(steps - 1, sites[i], 0));
    if (i + 1 < sites.size()) {
      inst.couplings.push_back({static_cast<int>(i), static_cast<int>(i) + 1, grid.at(steps - 1, sites[i], 2)});
    }
  }
  return inst;
}

}  // namespace

TEST_CASE("fcnn and lstm encoders") {
  const auto s = make_sample(Family::NearestNeighbor1D, 3, 1);
  const auto flat = encode_fcnn(s);
  REQUIRE(flat.input.shape == std::vector<int>{5});
  CHECK(flat.input.data == parameter_vector(s.instance));
  CHECK(encode_fcnn(make_sample(Family::AllToAll, 5, 2)).input.size() == 15);

  const auto seq = encode_lstm(s);
  REQUIRE(seq.input.shape == std::vector<int>{10, 5});
  for (int p = 0; p < 5; ++p) {
    CHECK(seq.input.at(0, p) == 0.0);
    CHECK(seq.input.at(9, p) == flat.input.data[p]);
    for (int k = 1; k < 10; ++k) {
      CHECK(seq.input.at(k, p) == doctest::Approx(s.trajectory.lambdas[k] * flat.input.data[p]).epsilon(1e-15));
    }
  }
  for (int k = 2; k < 10; ++k) {
    CHECK(seq.input.at(k, 0) / seq.input.at(1, 0) ==
          doctest::Approx(s.trajectory.lambdas[k] / s.trajectory.lambdas[1]));
  }
  CHECK(flat.target == s.trajectory.log_gaps);
}

TEST_CASE("targets invert to the gaps") {
  const auto s = make_sample(Family::AllToAll, 4, 9, 50);
  const auto e = encode_lstm(s);
  for (int k = 0; k < 50; ++k) CHECK(std::abs(std::expm1(e.target[k]) - s.trajectory.gaps[k]) < 1e-12);
}

TEST_CASE("zero instance encodes to zeros with the driver-only target") {
  auto s = make_sample(Family::NearestNeighbor1D, 3, 4);
  for (auto& c : s.instance.couplings) c.value = 0.0;
  for (auto& k : s.instance.fields) k = 0.0;
  s.trajectory = gap_trajectory(s.instance, make_schedule(10));
  const auto e = encode_fcnn(s);
  for (double x : e.input.data) CHECK(x == 0.0);
  for (int k = 0; k < 10; ++k) CHECK(std::abs(std::expm1(e.target[k]) - 2.0 * (1.0 - k / 9.0)) < 1e-9);
}

TEST_CASE("convlstm1d: placement, mask and round trip") {
  const auto s = make_sample(Family::NearestNeighbor1D, 3, 5);
  const auto e = encode_convlstm1d(s, 5, 1);
  REQUIRE(e.input.shape == std::vector<int>{10, 5, 4});
  for (int k = 0; k < 10; ++k) {
    const std::vector<double> mask{e.input.at(k, 0, 3), e.input.at(k, 1, 3), e.input.at(k, 2, 3), e.input.at(k, 3, 3),
                                   e.input.at(k, 4, 3)};
    CHECK(mask == std::vector<double>{0, 1, 1, 1, 0});
  }
  const auto decoded = decode_chain(e.input, 10);
  CHECK(decoded.fields == s.instance.fields);
  REQUIRE(decoded.couplings.size() == 2);
  for (int i = 0; i < 2; ++i) CHECK(decoded.couplings[i].value == s.instance.couplings[i].value);
  // Open chain: nothing to the left of the first site or right of the last.
  CHECK(e.input.at(9, 1, 1) == 0.0);
  CHECK(e.input.at(9, 3, 2) == 0.0);
  CHECK(e.input.at(9, 2, 1) == s.instance.couplings[0].value);

  const auto full = encode_convlstm1d(s, 3, 0);
  for (int k = 0; k < 10; ++k) {
    for (int x = 0; x < 3; ++x) CHECK(full.input.at(k, x, 3) == 1.0);
  }
  CHECK_THROWS_AS(encode_convlstm1d(s, 2, 0), SizeError);
  CHECK_THROWS_AS(encode_convlstm1d(s, 5, 3), InvalidArgument);
}

TEST_CASE("convlstm1d: translation covariance") {
  const auto s = make_sample(Family::NearestNeighbor1D, 4, 6);
  const auto a = encode_convlstm1d(s, 9, 1);
  const auto b = encode_convlstm1d(s, 9, 4);
  for (int k = 0; k < 10; ++k) {
    for (int x = 0; x < 9; ++x) {
      for (int c = 0; c < 4; ++c) {
        const double shifted = x + 3 < 9 ? b.input.at(k, x + 3, c) : 0.0;
        CHECK(a.input.at(k, x, c) == shifted);
      }
    }
  }
  CHECK(a.target == b.target);
}

TEST_CASE("convlstm2d: LHZ layout") {
  const auto s = make_sample(Family::LhzPhysical, 5, 7);
  const auto e = encode_convlstm2d(s, 6, 7, 1, 2);
  REQUIRE(e.input.shape == std::vector<int>{10, 6, 7, 2});
  for (int k = 0; k < 10; ++k) {
    double mask = 0.0;
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 7; ++c) {
        const double v = e.input.at(k, r, c, 1);
        CHECK((v == 0.0 || v == 1.0));
        mask += v;
      }
    }
    CHECK(mask == 15.0);
  }
  for (const auto& q : s.instance.couplings) {
    const auto [r, c] = lhz_grid_position(q.i, q.j);
    CHECK(e.input.at(9, r + 1, c + 2, 0) == q.value);
  }
  CHECK_THROWS_AS(encode_convlstm2d(s, 4, 6, 0, 0), SizeError);
  CHECK_THROWS_AS(encode_convlstm2d(make_sample(Family::NearestNeighbor1D, 3, 1), 4, 4, 0, 0), InvalidArgument);
}

TEST_CASE("fixed placement is reproducible and random placement covers the range") {
  const auto s = make_sample(Family::NearestNeighbor1D, 3, 8);
  EncoderConfig cfg{EncoderKind::ConvLstm1D, 8, 0, 0};
  CHECK(encode_fixed(s, cfg).input == encode_fixed(s, cfg).input);
  Rng rng(3);
  std::set<int> offsets;
  for (int t = 0; t < 200; ++t) offsets.insert(draw_offset(rng, 3, 8));
  CHECK(offsets == std::set<int>{0, 1, 2, 3, 4, 5});
  Rng tight(4);
  CHECK(draw_offset(tight, 8, 8) == 0);
}

TEST_CASE("split: fractions, coverage and determinism") {
  std::vector<Sample> samples(100000);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].id = i;
  const auto counts = split_dataset(samples, {0.9, 0.1, 0.0}, 5);
  CHECK(counts.train == 90000);
  CHECK(counts.validation == 10000);
  CHECK(counts.test == 0);
  CHECK(count_splits(samples) == counts);

  std::vector<Sample> a(50), b(50);
  split_dataset(a, {0.6, 0.2, 0.2}, 11);
  split_dataset(b, {0.6, 0.2, 0.2}, 11);
  for (std::size_t i = 0; i < 50; ++i) CHECK(a[i].split == b[i].split);

  std::vector<Sample> all(7);
  CHECK(split_dataset(all, {1.0, 0.0, 0.0}, 1).train == 7);
  CHECK_THROWS_AS(split_dataset(all, {0.5, 0.6, 0.0}, 1), InvalidArgument);
}

TEST_CASE("dataset: save/load round trip and corruption detection") {
  const fs::path dir = test_paths::scratch("dataset_roundtrip");
  Dataset ds;
  for (int m = 3; m <= 5; ++m) {
    for (std::uint64_t s = 0; s < 4; ++s) ds.samples.push_back(make_sample(Family::NearestNeighbor1D, m, 10 * m + s));
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) ds.samples[i].id = i;
  split_dataset(ds.samples, {0.5, 0.25, 0.25}, 3);
  ds.manifest.family = Family::NearestNeighbor1D;
  ds.manifest.sizes = {3, 4, 5};
  ds.manifest.n_steps = 10;
  ds.manifest.encoder = {EncoderKind::ConvLstm1D, 6, 0, 0};
  ds.manifest.seed = 3;
  save_dataset(dir, ds);
  CHECK(ds.manifest.records == ds.samples.size());

  const auto loaded = load_dataset(dir);
  CHECK(loaded.samples == ds.samples);
  CHECK(loaded.manifest.counts == count_splits(ds.samples));
  CHECK(loaded.manifest.encoder == ds.manifest.encoder);

  // Saving again gives identical bytes.
  const auto first = test_paths::slurp(dir / "samples.jsonl");
  Dataset again = loaded;
  save_dataset(dir, again);
  CHECK(test_paths::slurp(dir / "samples.jsonl") == first);

  SUBCASE("flipped byte") {
    auto bytes = first;
    bytes[bytes.size() / 2] = bytes[bytes.size() / 2] == '1' ? '2' : '1';
    test_paths::spit(dir / "samples.jsonl", bytes);
    CHECK_THROWS_AS(load_dataset(dir), ChecksumError);
  }
  SUBCASE("version mismatch") {
    auto manifest = test_paths::slurp(dir / "manifest.json");
    manifest.replace(manifest.find("\"version\": 1"), 12, "\"version\": 9");
    test_paths::spit(dir / "manifest.json", manifest);
    CHECK_THROWS_AS(load_dataset(dir), VersionError);
  }
  SUBCASE("width smaller than a chain") {
    auto manifest = test_paths::slurp(dir / "manifest.json");
    manifest.replace(manifest.find("\"width\": 6"), 10, "\"width\": 4");
    test_paths::spit(dir / "manifest.json", manifest);
    CHECK_THROWS_AS(load_dataset(dir), FormatError);
  }
  SUBCASE("missing directory") { CHECK_THROWS(load_dataset(dir / "nope")); }
}
