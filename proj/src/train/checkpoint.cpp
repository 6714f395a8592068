#include "train/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "core/rng.hpp"
#include "models/groups.hpp"

namespace dualcycle::train {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'D', 'C', 'Y', 'C', 'K', 'P', 'T', '1'};

const char* dtype_tag(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    default:
      throw std::runtime_error("checkpoint: unsupported tensor dtype");
  }
}

torch::ScalarType dtype_from_tag(const std::string& tag) {
  if (tag == "f32") return torch::kFloat32;
  if (tag == "f64") return torch::kFloat64;
  if (tag == "i64") return torch::kInt64;
  throw std::runtime_error("checkpoint: unknown dtype tag '" + tag + "'");
}

struct NamedTensor {
  std::string name;
  torch::Tensor tensor;
};

// Model parameters first, then both optimizers' moment tensors, all under
// stable "<group>/<index>" style names.
std::vector<NamedTensor> collect_tensors(const TrainState& st) {
  std::vector<NamedTensor> out;
  for (auto& [name, p] : models::named_group_parameters(st.generator)) {
    out.push_back({name, p});
  }
  for (auto& [name, p] : models::named_group_parameters(st.discriminator)) {
    out.push_back({name, p});
  }
  auto add_opt = [&](const char* prefix, const Adam& opt) {
    for (const auto& e : opt.entries()) {
      out.push_back({std::string(prefix) + e.name + "#m", e.m});
      out.push_back({std::string(prefix) + e.name + "#v", e.v});
    }
  };
  add_opt("g_opt/", *st.g_opt);
  add_opt("d_opt/", *st.d_opt);
  return out;
}

json opt_steps(const Adam& opt) {
  json steps = json::object();
  for (const auto& e : opt.entries()) steps[e.name] = e.step_count;
  return steps;
}

void restore_opt_steps(Adam& opt, const json& steps) {
  for (auto& e : opt.entries()) {
    e.step_count = steps.at(e.name).get<int64_t>();
  }
}

}  // namespace

TrainState make_train_state(const models::GeneratorSpec& gen_spec,
                            const models::DiscriminatorSpec& disc_spec,
                            uint64_t seed, const Adam::Options& adam) {
  TrainState st;
  st.master_seed = seed;
  st.gen_spec = gen_spec;
  st.disc_spec = disc_spec;
  st.generator =
      models::build_generator(gen_spec, core::derive_seed(seed, "generator"));
  st.discriminator = models::build_discriminator(
      disc_spec, core::derive_seed(seed, "discriminator"));
  st.g_opt = std::make_shared<Adam>(
      models::named_group_parameters(st.generator), adam);
  st.d_opt = std::make_shared<Adam>(
      models::named_group_parameters(st.discriminator), adam);
  return st;
}

void save_checkpoint(const fs::path& path, const TrainState& st) {
  auto tensors = collect_tensors(st);

  json header;
  header["version"] = 1;
  header["epoch"] = st.epoch;
  header["iteration"] = st.iteration;
  std::ostringstream seed_hex;
  seed_hex << std::hex << st.master_seed;
  header["master_seed"] = seed_hex.str();
  header["generator_spec"] = st.gen_spec;
  header["discriminator_spec"] = st.disc_spec;
  header["g_opt_lr"] = st.g_opt->lr();
  header["d_opt_lr"] = st.d_opt->lr();
  header["g_opt_steps"] = opt_steps(*st.g_opt);
  header["d_opt_steps"] = opt_steps(*st.d_opt);

  json hist = json::array();
  for (const auto& r : st.history) {
    hist.push_back({r.iteration, r.d_image, r.g_adv_image, r.l1, r.d_noise,
                    r.g_adv_noise, r.g_total});
  }
  header["history"] = std::move(hist);
  json comps = json::array();
  for (const auto& c : st.component_history) {
    comps.push_back({c.iteration, c.real_term, c.fake_term});
  }
  header["components"] = std::move(comps);

  json manifest = json::array();
  for (const auto& nt : tensors) {
    auto c = nt.tensor.contiguous();
    manifest.push_back({{"name", nt.name},
                        {"dtype", dtype_tag(c.scalar_type())},
                        {"shape", c.sizes().vec()},
                        {"nbytes", c.numel() * c.element_size()}});
  }
  header["tensors"] = std::move(manifest);

  const std::string header_str = header.dump();
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open checkpoint for writing: " +
                               tmp.string());
    }
    out.write(kMagic, sizeof(kMagic));
    uint64_t len = header_str.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_str.data(), static_cast<std::streamsize>(len));
    for (const auto& nt : tensors) {
      auto c = nt.tensor.contiguous();
      out.write(static_cast<const char*>(c.data_ptr()),
                c.numel() * c.element_size());
    }
    if (!out) {
      throw std::runtime_error("checkpoint write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

TrainState load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint: " + path.string());
  }
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in) {
    throw std::runtime_error("checkpoint truncated in header length");
  }
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) {
    throw std::runtime_error("checkpoint truncated in header");
  }
  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("corrupt checkpoint header: ") +
                             e.what());
  }

  models::GeneratorSpec gen_spec = header.at("generator_spec");
  models::DiscriminatorSpec disc_spec = header.at("discriminator_spec");
  uint64_t seed =
      std::stoull(header.at("master_seed").get<std::string>(), nullptr, 16);

  TrainState st = make_train_state(gen_spec, disc_spec, seed, Adam::Options{});
  st.epoch = header.at("epoch").get<int64_t>();
  st.iteration = header.at("iteration").get<int64_t>();
  st.g_opt->set_lr(header.at("g_opt_lr").get<double>());
  st.d_opt->set_lr(header.at("d_opt_lr").get<double>());

  for (const auto& row : header.at("history")) {
    losses::LossRecord r;
    r.iteration = row.at(0).get<int64_t>();
    r.d_image = row.at(1).get<double>();
    r.g_adv_image = row.at(2).get<double>();
    r.l1 = row.at(3).get<double>();
    r.d_noise = row.at(4).get<double>();
    r.g_adv_noise = row.at(5).get<double>();
    r.g_total = row.at(6).get<double>();
    st.history.push_back(r);
  }
  for (const auto& row : header.at("components")) {
    st.component_history.push_back({row.at(0).get<int64_t>(),
                                    row.at(1).get<double>(),
                                    row.at(2).get<double>()});
  }

  auto targets = collect_tensors(st);
  const auto& manifest = header.at("tensors");
  if (manifest.size() != targets.size()) {
    throw std::runtime_error(
        "checkpoint tensor count mismatch: file has " +
        std::to_string(manifest.size()) + ", model needs " +
        std::to_string(targets.size()));
  }
  torch::NoGradGuard no_grad;
  for (size_t i = 0; i < targets.size(); ++i) {
    const auto& entry = manifest.at(i);
    const std::string name = entry.at("name").get<std::string>();
    if (name != targets[i].name) {
      throw std::runtime_error("checkpoint tensor order mismatch at '" + name +
                               "' (expected '" + targets[i].name + "')");
    }
    auto dtype = dtype_from_tag(entry.at("dtype").get<std::string>());
    auto shape = entry.at("shape").get<std::vector<int64_t>>();
    const int64_t nbytes = entry.at("nbytes").get<int64_t>();
    auto buf = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    if (buf.numel() * buf.element_size() != nbytes) {
      throw std::runtime_error("checkpoint manifest inconsistent for '" +
                               name + "'");
    }
    in.read(static_cast<char*>(buf.data_ptr()), nbytes);
    if (!in) {
      throw std::runtime_error("checkpoint truncated in tensor '" + name +
                               "'");
    }
    if (buf.sizes() != targets[i].tensor.sizes()) {
      throw std::runtime_error("checkpoint shape mismatch for '" + name + "'");
    }
    targets[i].tensor.copy_(buf);
  }

  restore_opt_steps(*st.g_opt, header.at("g_opt_steps"));
  restore_opt_steps(*st.d_opt, header.at("d_opt_steps"));
  return st;
}

TrainState load_checkpoint(const fs::path& path,
                           const models::GeneratorSpec& expected_gen,
                           const models::DiscriminatorSpec& expected_disc) {
  auto st = load_checkpoint(path);
  json have_g = st.gen_spec, want_g = expected_gen;
  json have_d = st.disc_spec, want_d = expected_disc;
  if (have_g != want_g || have_d != want_d) {
    throw std::runtime_error(
        "checkpoint spec mismatch: file was written for a different "
        "generator/discriminator configuration");
  }
  return st;
}

}  // namespace dualcycle::train
