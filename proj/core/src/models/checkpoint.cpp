#include "mb2d/models/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mb2d/errors.hpp"

namespace mb2d::models {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'M', 'B', '2', 'D', 'W', '0', '0', '1'};

void write_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

template <class V>
void put(std::string& buf, V v) {
  char raw[sizeof(V)];
  std::memcpy(raw, &v, sizeof(V));
  buf.append(raw, sizeof(V));
}

template <class V>
V get(std::istream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) throw DataError("truncated checkpoint weights");
  return v;
}

}  // namespace

std::string role_name(Role r) {
  switch (r) {
    case Role::mbrnn: return "mbrnn";
    case Role::msdr: return "msdr";
    case Role::onestage: return "onestage";
  }
  return "unknown";
}

Role parse_role(const std::string& s) {
  if (s == "mbrnn") return Role::mbrnn;
  if (s == "msdr") return Role::msdr;
  if (s == "onestage") return Role::onestage;
  throw ConfigError("unknown model role '" + s + "'");
}

std::int64_t ModelState::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& w : weights) n += static_cast<std::int64_t>(w.size());
  return n;
}

ModelState capture(Role role, nlohmann::json config, const UNetSpec& spec,
                   std::span<const nn::Var<float>> params) {
  ModelState state;
  state.role = role;
  state.config = std::move(config);
  state.spec = spec;
  for (const auto& p : params) state.weights.push_back(p->value);
  return state;
}

void restore(const ModelState& state, std::span<const nn::Var<float>> params) {
  if (state.weights.size() != params.size())
    throw ConfigError("checkpoint has " + std::to_string(state.weights.size()) + " tensors, model expects " +
                      std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.weights[i].shape() != params[i]->value.shape())
      throw ConfigError("checkpoint tensor " + std::to_string(i) + " has shape " + state.weights[i].shape().str() +
                        ", model expects " + params[i]->value.shape().str());
    params[i]->value = state.weights[i];
  }
}

void save_checkpoint(const fs::path& dir, const ModelState& state) {
  fs::create_directories(dir);
  std::string bin(kMagic, sizeof(kMagic));
  put<std::uint32_t>(bin, static_cast<std::uint32_t>(state.weights.size()));
  for (const auto& w : state.weights) {
    const auto& s = w.shape();
    for (int d : {s.c, s.n, s.h, s.w}) put<std::int32_t>(bin, d);
    bin.append(reinterpret_cast<const char*>(w.data()), w.size() * sizeof(float));
  }
  write_atomic(dir / "model.bin", bin);

  nlohmann::json manifest{{"role", role_name(state.role)},
                          {"config", state.config},
                          {"unet", state.spec},
                          {"seed", state.seed},
                          {"step", state.step},
                          {"parameter_count", state.parameter_count()},
                          {"metric_history", state.metric_history}};
  write_atomic(dir / "model.json", manifest.dump(2) + "\n");
}

ModelState load_checkpoint(const fs::path& dir) {
  std::ifstream mf(dir / "model.json");
  if (!mf) throw ConfigError("checkpoint manifest not found: " + (dir / "model.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mf);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  ModelState state;
  state.role = parse_role(manifest.at("role").get<std::string>());
  state.config = manifest.at("config");
  state.spec = manifest.at("unet").get<UNetSpec>();
  state.seed = manifest.at("seed").get<std::uint64_t>();
  state.step = manifest.at("step").get<std::int64_t>();
  state.metric_history = manifest.value("metric_history", nlohmann::json::array());

  std::ifstream in(dir / "model.bin", std::ios::binary);
  if (!in) throw ConfigError("checkpoint weights not found: " + (dir / "model.bin").string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("not a checkpoint weight file: " + (dir / "model.bin").string());
  const auto count = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    nn::Shape s;
    s.c = get<std::int32_t>(in);
    s.n = get<std::int32_t>(in);
    s.h = get<std::int32_t>(in);
    s.w = get<std::int32_t>(in);
    nn::Tensor<float> t(s);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint weights");
    state.weights.push_back(std::move(t));
  }
  return state;
}

double count_params(const ModelState& state) { return static_cast<double>(state.parameter_count()) / 1e6; }

void to_json(nlohmann::json& j, const UNetSpec& s) {
  j = nlohmann::json{{"levels", s.levels},
                     {"base_channels", s.base_channels},
                     {"in_channels", s.in_channels},
                     {"out_channels", s.out_channels},
                     {"feature_channels", s.feature_channels}};
}

void from_json(const nlohmann::json& j, UNetSpec& s) {
  s.levels = j.at("levels").get<int>();
  s.base_channels = j.at("base_channels").get<int>();
  s.in_channels = j.at("in_channels").get<int>();
  s.out_channels = j.at("out_channels").get<int>();
  s.feature_channels = j.at("feature_channels").get<int>();
}

}  // namespace mb2d::models
