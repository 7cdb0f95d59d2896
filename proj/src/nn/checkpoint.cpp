#include "gapnet/nn/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gapnet/dataset.hpp"
#include "gapnet/errors.hpp"

namespace gapnet::nn {

using nlohmann::json;
using nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

ordered_json network_spec_to_json(const NetworkSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  ordered_json layers = ordered_json::array();
  for (const auto& l : spec.layers) {
    ordered_json lj;
    lj["kind"] = std::string(to_string(l.kind));
    lj["units"] = l.units;
    lj["kernel"] = {l.kernel_h, l.kernel_w};
    lj["activation"] = std::string(to_string(l.activation));
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

NetworkSpec network_spec_from_json(const json& j) {
  NetworkSpec spec;
  spec.name = j.value("name", std::string());
  for (const auto& lj : j.at("layers")) {
    LayerSpec l;
    l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
    l.units = lj.value("units", 0);
    if (lj.contains("kernel")) {
      l.kernel_h = lj.at("kernel").at(0).get<int>();
      l.kernel_w = lj.at("kernel").at(1).get<int>();
    }
    l.activation = activation_from_string(lj.value("activation", std::string("linear")));
    spec.layers.push_back(l);
  }
  return spec;
}

namespace {

ordered_json history_to_json(const std::vector<EpochRecord>& history) {
  ordered_json out = ordered_json::array();
  for (const auto& r : history) {
    // JSON has no NaN; a missing validation loss is written as null.
    ordered_json val = std::isfinite(r.val_mse) ? ordered_json(r.val_mse) : ordered_json(nullptr);
    out.push_back({{"epoch", r.epoch}, {"train_mse", r.train_mse}, {"val_mse", val}});
  }
  return out;
}

std::vector<EpochRecord> history_from_json(const json& j) {
  std::vector<EpochRecord> out;
  for (const auto& r : j) {
    EpochRecord rec;
    rec.epoch = r.at("epoch").get<int>();
    rec.train_mse = r.at("train_mse").get<double>();
    rec.val_mse = r.at("val_mse").is_null() ? std::nan("") : r.at("val_mse").get<double>();
    out.push_back(rec);
  }
  return out;
}

void append_values(std::string& bytes, const Mat<double>& m) {
  const auto* p = reinterpret_cast<const char*>(m.data());
  bytes.append(p, static_cast<std::size_t>(m.size()) * sizeof(double));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ck) {
  const auto& w = ck.weights;
  if (ck.adam.m.size() != w.size() || ck.adam.v.size() != w.size()) {
    throw ShapeError("checkpoint Adam state does not match the weights");
  }
  std::filesystem::create_directories(dir);

  std::string bytes;
  bytes.reserve(3 * w.scalar_count() * sizeof(double));
  for (const auto& v : w.values) append_values(bytes, v);
  for (const auto& v : ck.adam.m) append_values(bytes, v);
  for (const auto& v : ck.adam.v) append_values(bytes, v);

  ordered_json j;
  j["format"] = "gapnet-checkpoint";
  j["version"] = kCheckpointVersion;
  j["code_version"] = ck.code_version.empty() ? code_version() : ck.code_version;
  j["network"] = network_spec_to_json(ck.spec);
  j["input_shape"] = {ck.input_shape.steps, ck.input_shape.height, ck.input_shape.width, ck.input_shape.channels};
  j["encoder"] = encoder_to_json(ck.encoder);
  j["family"] = std::string(to_string(ck.family));
  j["precision"] = ck.precision;
  j["seed"] = ck.seed;
  j["epochs_completed"] = ck.epochs_completed;
  j["dataset_checksum"] = ck.dataset_checksum;
  j["adam"] = {{"alpha", ck.adam.config.alpha},
               {"beta1", ck.adam.config.beta1},
               {"beta2", ck.adam.config.beta2},
               {"epsilon", ck.adam.config.epsilon},
               {"step", ck.adam.step}};
  ordered_json params = ordered_json::array();
  for (std::size_t p = 0; p < w.size(); ++p) {
    params.push_back({{"name", w.names[p]}, {"rows", w.values[p].rows()}, {"cols", w.values[p].cols()}});
  }
  j["parameters"] = std::move(params);
  j["weights_file"] = {{"name", "weights.bin"}, {"crc32", crc32_hex(bytes)}, {"bytes", bytes.size()}};
  j["history"] = history_to_json(ck.history);

  {
    std::ofstream out(dir / "weights.bin", std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("cannot write " + (dir / "weights.bin").string());
  }
  std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("cannot write " + (dir / "checkpoint.json").string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  json j;
  {
    std::ifstream in(dir / "checkpoint.json");
    if (!in) throw FormatError("no checkpoint at " + dir.string());
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError("malformed checkpoint: " + std::string(e.what()));
    }
  }
  Checkpoint ck;
  std::string crc;
  std::size_t n_bytes = 0;
  try {
    if (j.value("format", std::string()) != "gapnet-checkpoint") throw FormatError("not a gapnet checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw VersionError("checkpoint version " + std::to_string(version) + " is not supported");
    }
    ck.code_version = j.at("code_version").get<std::string>();
    ck.spec = network_spec_from_json(j.at("network"));
    const auto& s = j.at("input_shape");
    ck.input_shape = {s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>(), s.at(3).get<int>()};
    ck.encoder = encoder_from_json(j.at("encoder"));
    ck.family = family_from_string(j.at("family").get<std::string>());
    ck.precision = j.at("precision").get<std::string>();
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.epochs_completed = j.at("epochs_completed").get<int>();
    ck.dataset_checksum = j.at("dataset_checksum").get<std::string>();
    const auto& a = j.at("adam");
    ck.adam.config = {a.at("alpha").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                      a.at("epsilon").get<double>()};
    ck.adam.step = a.at("step").get<std::int64_t>();
    for (const auto& p : j.at("parameters")) {
      ck.weights.names.push_back(p.at("name").get<std::string>());
      const auto rows = p.at("rows").get<Eigen::Index>();
      const auto cols = p.at("cols").get<Eigen::Index>();
      ck.weights.values.emplace_back(rows, cols);
      ck.adam.m.emplace_back(rows, cols);
      ck.adam.v.emplace_back(rows, cols);
    }
    crc = j.at("weights_file").at("crc32").get<std::string>();
    n_bytes = j.at("weights_file").at("bytes").get<std::size_t>();
    ck.history = history_from_json(j.at("history"));
  } catch (const json::exception& e) {
    throw FormatError("incomplete checkpoint: " + std::string(e.what()));
  }

  std::ifstream in(dir / "weights.bin", std::ios::binary);
  if (!in) throw FormatError("checkpoint weights missing in " + dir.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  if (bytes.size() != n_bytes || bytes.size() != 3 * ck.weights.scalar_count() * sizeof(double)) {
    throw FormatError("checkpoint weights file is truncated");
  }
  if (crc32_hex(bytes) != crc) throw ChecksumError("checkpoint weights checksum mismatch");

  std::size_t offset = 0;
  auto read_into = [&](Mat<double>& m) {
    const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(double);
    std::memcpy(m.data(), bytes.data() + offset, n);
    offset += n;
  };
  for (auto& v : ck.weights.values) read_into(v);
  for (auto& v : ck.adam.m) read_into(v);
  for (auto& v : ck.adam.v) read_into(v);
  return ck;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "epoch,train_mse,val_mse\n";
  out.precision(17);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_mse << ',';
    if (std::isfinite(r.val_mse)) out << r.val_mse;
    out << '\n';
  }
}

}  // namespace gapnet::nn
