#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gapnet/dataset.hpp"
#include "gapnet/errors.hpp"

#ifndef GAPNET_GIT_REVISION
#define GAPNET_GIT_REVISION "unknown"
#endif

namespace gapnet {

using nlohmann::json;
using nlohmann::ordered_json;

std::string code_version() { return std::string("gapnet 0.1.0+") + GAPNET_GIT_REVISION; }

std::string crc32_hex(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

std::string_view method_name(SolverPolicy::Method m) {
  switch (m) {
    case SolverPolicy::Method::Auto:
      return "auto";
    case SolverPolicy::Method::Dense:
      return "dense";
    case SolverPolicy::Method::Lanczos:
      return "lanczos";
  }
  return "auto";
}

SolverPolicy::Method method_from_name(const std::string& name) {
  if (name == "auto") return SolverPolicy::Method::Auto;
  if (name == "dense") return SolverPolicy::Method::Dense;
  if (name == "lanczos") return SolverPolicy::Method::Lanczos;
  throw FormatError("unknown solver method '" + name + "'");
}

}  // namespace

ordered_json instance_to_json(const ProblemInstance& instance) {
  ordered_json j;
  j["family"] = std::string(to_string(instance.family));
  j["M"] = instance.size;
  ordered_json couplings = ordered_json::array();
  for (const auto& c : instance.couplings) couplings.push_back(ordered_json::array({c.i, c.j, c.value}));
  j["couplings"] = std::move(couplings);
  j["fields"] = instance.fields;
  j["seed"] = instance.seed;
  if (instance.family == Family::LhzPhysical) {
    ordered_json plaquettes = ordered_json::array();
    for (const auto& p : instance.plaquettes) {
      plaquettes.push_back(std::vector<int>(p.members().begin(), p.members().end()));
    }
    j["plaquettes"] = std::move(plaquettes);
    j["C"] = instance.constraint_strength;
  }
  return j;
}

ProblemInstance instance_from_json(const json& j) {
  ProblemInstance instance;
  instance.family = family_from_string(j.at("family").get<std::string>());
  instance.size = j.at("M").get<int>();
  for (const auto& c : j.at("couplings")) {
    instance.couplings.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<double>()});
  }
  instance.fields = j.at("fields").get<std::vector<double>>();
  instance.seed = j.at("seed").get<std::uint64_t>();
  if (instance.family == Family::LhzPhysical) {
    for (const auto& p : j.at("plaquettes")) {
      const auto members = p.get<std::vector<int>>();
      if (members.size() < 3 || members.size() > 4) throw FormatError("plaquette must list 3 or 4 qubits");
      Plaquette plaquette;
      plaquette.arity = static_cast<int>(members.size());
      std::copy(members.begin(), members.end(), plaquette.qubits.begin());
      instance.plaquettes.push_back(plaquette);
    }
    instance.constraint_strength = j.at("C").get<double>();
  }
  validate(instance);
  return instance;
}

ordered_json sample_to_json(const Sample& sample) {
  ordered_json j;
  j["instance_id"] = sample.id;
  const ordered_json instance = instance_to_json(sample.instance);
  for (const auto& [key, value] : instance.items()) j[key] = value;
  j["split"] = std::string(to_string(sample.split));
  j["placement_seed"] = sample.placement_seed;
  j["lambda"] = sample.trajectory.lambdas;
  j["gap"] = sample.trajectory.gaps;
  return j;
}

Sample sample_from_json(const json& j) {
  Sample sample;
  sample.id = j.at("instance_id").get<std::uint64_t>();
  sample.instance = instance_from_json(j);
  sample.split = split_from_string(j.at("split").get<std::string>());
  sample.placement_seed = j.at("placement_seed").get<std::uint64_t>();
  sample.trajectory =
      GapTrajectory::from_gaps(j.at("lambda").get<std::vector<double>>(), j.at("gap").get<std::vector<double>>());
  return sample;
}

ordered_json solver_to_json(const SolverPolicy& policy) {
  ordered_json j;
  j["method"] = std::string(method_name(policy.method));
  j["dense_max_qubits"] = policy.dense_max_qubits;
  j["qubit_cap"] = policy.qubit_cap;
  j["tol"] = policy.tol;
  j["max_iter"] = policy.max_iter;
  j["warm_start"] = policy.warm_start;
  j["seed"] = policy.seed;
  return j;
}

SolverPolicy solver_from_json(const json& j) {
  SolverPolicy policy;
  if (j.contains("method")) policy.method = method_from_name(j.at("method").get<std::string>());
  if (j.contains("dense_max_qubits")) policy.dense_max_qubits = j.at("dense_max_qubits").get<int>();
  if (j.contains("qubit_cap")) policy.qubit_cap = j.at("qubit_cap").get<int>();
  if (j.contains("tol")) policy.tol = j.at("tol").get<double>();
  if (j.contains("max_iter")) policy.max_iter = j.at("max_iter").get<int>();
  if (j.contains("warm_start")) policy.warm_start = j.at("warm_start").get<bool>();
  if (j.contains("seed")) policy.seed = j.at("seed").get<std::uint64_t>();
  return policy;
}

ordered_json encoder_to_json(const EncoderConfig& config) {
  ordered_json j;
  j["kind"] = std::string(to_string(config.kind));
  j["width"] = config.width;
  j["pad"] = {config.pad_height, config.pad_width};
  return j;
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig config;
  config.kind = encoder_from_string(j.at("kind").get<std::string>());
  config.width = j.value("width", 0);
  if (j.contains("pad")) {
    config.pad_height = j.at("pad").at(0).get<int>();
    config.pad_width = j.at("pad").at(1).get<int>();
  }
  return config;
}

void save_dataset(const std::filesystem::path& dir, Dataset& dataset) {
  std::filesystem::create_directories(dir);
  auto& m = dataset.manifest;

  std::string lines;
  for (const auto& sample : dataset.samples) {
    if (sample.trajectory.n_steps() != m.n_steps) {
      throw ShapeError("sample " + std::to_string(sample.id) + " has " +
                       std::to_string(sample.trajectory.n_steps()) + " sweep points, dataset uses " +
                       std::to_string(m.n_steps));
    }
    lines += sample_to_json(sample).dump();
    lines += '\n';
  }
  m.records = dataset.samples.size();
  m.counts = count_splits(dataset.samples);
  m.samples_crc32 = crc32_hex(lines);
  if (m.code_version.empty()) m.code_version = code_version();
  write_file(dir / m.samples_file, lines);

  ordered_json j;
  j["format"] = "gapnet-dataset";
  j["version"] = m.version;
  j["family"] = std::string(to_string(m.family));
  j["sizes"] = m.sizes;
  j["counts"] = {{"train", m.counts.train}, {"validation", m.counts.validation}, {"test", m.counts.test}};
  j["n_steps"] = m.n_steps;
  j["encoder"] = encoder_to_json(m.encoder);
  j["seed"] = m.seed;
  j["constraint_strength"] = m.constraint_strength;
  j["solver"] = solver_to_json(m.solver);
  j["code_version"] = m.code_version;
  j["files"] = {{"samples", {{"name", m.samples_file}, {"crc32", m.samples_crc32}, {"records", m.records}}}};
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw FormatError("malformed dataset manifest: " + std::string(e.what()));
  }

  Dataset dataset;
  auto& m = dataset.manifest;
  try {
    if (j.value("format", std::string()) != "gapnet-dataset") throw FormatError("not a gapnet dataset manifest");
    m.version = j.at("version").get<int>();
    if (m.version != kDatasetVersion) {
      throw VersionError("dataset version " + std::to_string(m.version) + " is not supported (expected " +
                         std::to_string(kDatasetVersion) + ")");
    }
    m.family = family_from_string(j.at("family").get<std::string>());
    m.sizes = j.at("sizes").get<std::vector<int>>();
    m.counts.train = j.at("counts").at("train").get<std::size_t>();
    m.counts.validation = j.at("counts").at("validation").get<std::size_t>();
    m.counts.test = j.at("counts").at("test").get<std::size_t>();
    m.n_steps = j.at("n_steps").get<int>();
    m.encoder = encoder_from_json(j.at("encoder"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.constraint_strength = j.at("constraint_strength").get<double>();
    m.solver = solver_from_json(j.at("solver"));
    m.code_version = j.at("code_version").get<std::string>();
    const auto& file = j.at("files").at("samples");
    m.samples_file = file.at("name").get<std::string>();
    m.samples_crc32 = file.at("crc32").get<std::string>();
    m.records = file.at("records").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError("incomplete dataset manifest: " + std::string(e.what()));
  }

  const std::string bytes = read_file(dir / m.samples_file);
  const std::string actual = crc32_hex(bytes);
  if (actual != m.samples_crc32) {
    throw ChecksumError("checksum mismatch for " + m.samples_file + ": manifest " + m.samples_crc32 + ", file " +
                        actual);
  }

  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      dataset.samples.push_back(sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("record " + std::to_string(line_no) + " is malformed: " + e.what());
    }
  }
  if (!bytes.empty() && bytes.back() != '\n') throw FormatError("samples file is truncated");
  if (dataset.samples.size() != m.records) {
    throw FormatError("manifest lists " + std::to_string(m.records) + " records, file has " +
                      std::to_string(dataset.samples.size()));
  }
  if (!(count_splits(dataset.samples) == m.counts)) throw FormatError("split counts disagree with manifest");

  for (const auto& s : dataset.samples) {
    if (s.trajectory.n_steps() != m.n_steps) {
      throw FormatError("record " + std::to_string(s.id) + " does not have " + std::to_string(m.n_steps) +
                        " sweep points");
    }
    if (m.encoder.kind == EncoderKind::ConvLstm1D && s.instance.size > m.encoder.width) {
      throw FormatError("record " + std::to_string(s.id) + " (M=" + std::to_string(s.instance.size) +
                        ") exceeds the dataset padding width " + std::to_string(m.encoder.width));
    }
    if (m.encoder.kind == EncoderKind::ConvLstm2D) {
      const int extent = lhz_grid_extent(s.instance);
      if (extent > m.encoder.pad_height || extent > m.encoder.pad_width) {
        throw FormatError("record " + std::to_string(s.id) + " exceeds the dataset padding grid");
      }
    }
  }
  return dataset;
}

std::string manifest_checksum(const std::filesystem::path& dir) {
  return crc32_hex(read_file(dir / "manifest.json"));
}

}  // namespace gapnet
