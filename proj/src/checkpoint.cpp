#include "demoire/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "demoire/config_json.hpp"

namespace demoire {

namespace {

constexpr char kMagic[8] = {'D', 'M', 'R', 'C', 'K', 'P', 'T', '1'};

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_tensor(std::ostream& out, const Tensor<float>& t) {
  const Shape4& s = t.shape();
  const std::int64_t dims[4] = {s.n, s.c, s.h, s.w};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(t.data()),
            std::streamsize(sizeof(float)) * t.size());
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

Tensor<float> read_tensor(std::istream& in) {
  std::int64_t dims[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || dims[0] < 1 || dims[1] < 1 || dims[2] < 1 || dims[3] < 1) {
    throw CheckpointError("corrupt tensor header in weights file");
  }
  Tensor<float> t(Shape4{dims[0], dims[1], dims[2], dims[3]});
  in.read(reinterpret_cast<char*>(t.data()), std::streamsize(sizeof(float)) * t.size());
  if (!in) throw CheckpointError("truncated tensor data in weights file");
  return t;
}

std::string read_name(std::istream& in) {
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len == 0 || len > 4096) throw CheckpointError("corrupt parameter name");
  std::string name(len, '\0');
  in.read(name.data(), len);
  if (!in) throw CheckpointError("corrupt parameter name");
  return name;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const HyperVisionNet<float>& model,
                     const Adam<float>* adam, int epoch, const nlohmann::json& metrics) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof kMagic);
  const auto& params = model.parameters();
  write_u64(out, params.size());
  for (const auto& [name, v] : params) {
    const auto len = std::uint32_t(name.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(name.data(), len);
    write_tensor(out, v.value());
  }
  const std::uint8_t has_adam = (adam && adam->initialized()) ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&has_adam), 1);
  if (has_adam) {
    write_u64(out, adam->step());
    for (const auto& t : adam->moment1()) write_tensor(out, t);
    for (const auto& t : adam->moment2()) write_tensor(out, t);
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
  out.close();

  nlohmann::json sidecar = {{"config", model_config_to_json(model.config())},
                            {"seed", model.seed()},
                            {"epoch", epoch},
                            {"parameter_count", model.parameter_count()},
                            {"metrics", metrics}};
  std::ofstream js(sidecar_path(path), std::ios::trunc);
  if (!js) throw IoError("cannot open sidecar for writing: " + sidecar_path(path).string());
  js << sidecar.dump(2) << '\n';
  if (!js) throw IoError("failed writing sidecar " + sidecar_path(path).string());
}

CheckpointInfo read_sidecar(const std::filesystem::path& path) {
  std::ifstream js(sidecar_path(path));
  if (!js) throw CheckpointError("missing sidecar " + sidecar_path(path).string());
  nlohmann::json j;
  try {
    js >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed sidecar " + sidecar_path(path).string() + ": " + e.what());
  }
  CheckpointInfo info;
  try {
    info.config = model_config_from_json(j.at("config"));
    info.seed = j.at("seed").get<std::uint64_t>();
    info.epoch = j.at("epoch").get<int>();
    info.parameter_count = j.at("parameter_count").get<Index>();
    info.metrics = j.value("metrics", nlohmann::json());
  } catch (const ConfigError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("sidecar missing field: " + std::string(e.what()));
  }
  return info;
}

CheckpointInfo load_checkpoint(const std::filesystem::path& path, HyperVisionNet<float>& model,
                               Adam<float>* adam) {
  CheckpointInfo info = read_sidecar(path);
  if (info.parameter_count != model.parameter_count()) {
    throw CheckpointError("sidecar parameter_count " + std::to_string(info.parameter_count) +
                          " does not match model " + std::to_string(model.parameter_count()));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open weights file " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("bad magic in weights file " + path.string());
  }
  auto& params = model.parameters();
  const std::uint64_t count = read_u64(in);
  if (!in || count != params.size()) {
    throw CheckpointError("weights file holds " + std::to_string(count) +
                          " parameters, model has " + std::to_string(params.size()));
  }

  // Stage everything (validated) before touching the model.
  std::vector<Tensor<float>> weights;
  weights.reserve(params.size());
  for (const auto& [name, v] : params) {
    const std::string stored = read_name(in);
    if (stored != name) {
      throw CheckpointError("parameter name mismatch: file has \"" + stored +
                            "\", model expects \"" + name + "\"");
    }
    Tensor<float> t = read_tensor(in);
    if (!(t.shape() == v.shape())) {
      throw CheckpointError("parameter \"" + name + "\" shape " + t.shape().str() +
                            " does not match model " + v.shape().str());
    }
    weights.push_back(std::move(t));
  }
  std::uint8_t has_adam = 0;
  in.read(reinterpret_cast<char*>(&has_adam), 1);
  if (!in) throw CheckpointError("truncated weights file " + path.string());

  std::uint64_t adam_step = 0;
  std::vector<Tensor<float>> m1, m2;
  if (has_adam) {
    adam_step = read_u64(in);
    if (!in) throw CheckpointError("truncated optimizer state");
    for (std::size_t i = 0; i < params.size(); ++i) m1.push_back(read_tensor(in));
    for (std::size_t i = 0; i < params.size(); ++i) m2.push_back(read_tensor(in));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!(m1[i].shape() == params[i].second.shape()) ||
          !(m2[i].shape() == params[i].second.shape())) {
        throw CheckpointError("optimizer state shape mismatch at \"" + params[i].first + "\"");
      }
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i].second.value() = weights[i];
  if (adam) {
    adam->init(params);
    if (has_adam) {
      adam->set_step(adam_step);
      adam->moment1() = std::move(m1);
      adam->moment2() = std::move(m2);
    }
  }
  return info;
}

}  // namespace demoire
