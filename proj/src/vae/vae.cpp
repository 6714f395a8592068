#include "vae/vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "core/grid.hpp"
#include "core/rng.hpp"
#include "eval/metrics.hpp"
#include "models/init.hpp"
#include "train/adam.hpp"

namespace dualcycle::vae {

namespace F = torch::nn::functional;

void VAEConfig::validate() const {
  if (latent_size < 1) {
    throw std::invalid_argument("vae: latent_size must be >= 1");
  }
  if (depth < 1 || base_width < 1 || epochs < 0 || batch_size < 1) {
    throw std::invalid_argument("vae: invalid architecture/training sizes");
  }
  if (image_size % (int64_t{1} << depth) != 0 ||
      (image_size >> depth) < 1) {
    throw std::invalid_argument("vae: image_size not divisible by 2^depth");
  }
  if (!(lr > 0.0) || kl_weight < 0.0) {
    throw std::invalid_argument("vae: invalid lr or kl_weight");
  }
}

namespace {

int64_t stage_width(const VAEConfig& cfg, int64_t i) {
  return std::min(cfg.base_width << i, cfg.base_width * 8);
}

}  // namespace

ConvVAEImpl::ConvVAEImpl(VAEConfig c) : cfg(std::move(c)) {
  cfg.validate();
  using torch::nn::Conv2d;
  using torch::nn::Conv2dOptions;
  using torch::nn::ConvTranspose2d;
  using torch::nn::ConvTranspose2dOptions;
  using torch::nn::Linear;
  using torch::nn::ReLU;

  encoder = torch::nn::Sequential();
  for (int64_t i = 0; i < cfg.depth; ++i) {
    const int64_t in_ch = i == 0 ? 1 : stage_width(cfg, i - 1);
    encoder->push_back(
        Conv2d(Conv2dOptions(in_ch, stage_width(cfg, i), 4).stride(2).padding(1)));
    encoder->push_back(ReLU());
  }
  register_module("encoder", encoder);

  const int64_t s = cfg.image_size >> cfg.depth;
  const int64_t flat = stage_width(cfg, cfg.depth - 1) * s * s;
  fc_mu = register_module("fc_mu", Linear(flat, cfg.latent_size));
  fc_logvar = register_module("fc_logvar", Linear(flat, cfg.latent_size));
  fc_decode = register_module("fc_decode", Linear(cfg.latent_size, flat));

  decoder = torch::nn::Sequential();
  for (int64_t i = cfg.depth - 1; i >= 0; --i) {
    const int64_t in_ch = stage_width(cfg, i);
    const int64_t out_ch = i == 0 ? 1 : stage_width(cfg, i - 1);
    decoder->push_back(ReLU());
    decoder->push_back(ConvTranspose2d(
        ConvTranspose2dOptions(in_ch, out_ch, 4).stride(2).padding(1)));
  }
  register_module("decoder", decoder);
}

std::pair<torch::Tensor, torch::Tensor> ConvVAEImpl::encode(
    const torch::Tensor& x) {
  auto t = x.dim() == 3 ? x.unsqueeze(0) : x;
  auto h = encoder->forward(t).flatten(1);
  return {fc_mu->forward(h), fc_logvar->forward(h)};
}

torch::Tensor ConvVAEImpl::decode(const torch::Tensor& z) {
  const int64_t s = cfg.image_size >> cfg.depth;
  auto h = fc_decode->forward(z).view(
      {z.size(0), stage_width(cfg, cfg.depth - 1), s, s});
  return decoder->forward(h);
}

torch::Tensor ConvVAEImpl::reconstruct(const torch::Tensor& x) {
  auto [mu, logvar] = encode(x);
  return decode(mu);
}

torch::Tensor kl_divergence(const torch::Tensor& mu,
                            const torch::Tensor& logvar) {
  auto per_sample =
      -0.5 * (1.0 + logvar - mu * mu - logvar.exp()).sum(-1);
  return per_sample.mean();
}

ConvVAE train_vae(const std::vector<torch::Tensor>& masks,
                  const VAEConfig& cfg, uint64_t seed) {
  if (masks.empty()) {
    throw std::invalid_argument("train_vae: empty mask collection");
  }
  cfg.validate();

  ConvVAE model(cfg);
  models::init_weights(*model, core::derive_seed(seed, "vae"));

  std::vector<std::pair<std::string, torch::Tensor>> named;
  int64_t k = 0;
  for (auto& p : model->parameters()) {
    named.emplace_back("vae/" + std::to_string(k++), p);
  }
  train::Adam opt(std::move(named), train::Adam::Options{cfg.lr, 0.9, 0.999});

  auto stacked = torch::stack(masks);          // [N,1,S,S] in {-1,+1}
  auto targets = (stacked + 1.0) / 2.0;        // {0,1} pixel labels
  const int64_t n = stacked.size(0);

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(core::derive_seed(seed, "vae_order", {epoch}));
    std::shuffle(order.begin(), order.end(), rng);

    for (int64_t start = 0; start < n; start += cfg.batch_size) {
      const int64_t end = std::min(n, start + cfg.batch_size);
      auto idx = torch::tensor(std::vector<int64_t>(
          order.begin() + start, order.begin() + end));
      auto x = stacked.index_select(0, idx);
      auto y = targets.index_select(0, idx);

      auto [mu, logvar] = model->encode(x);
      auto eps_gen = core::make_generator(
          core::derive_seed(seed, "vae_eps", {epoch, start}));
      auto eps = torch::randn(mu.sizes(), eps_gen, mu.options());
      auto z = mu + eps * (0.5 * logvar).exp();
      auto logits = model->decode(z);

      auto recon = F::binary_cross_entropy_with_logits(
                       logits, y,
                       F::BinaryCrossEntropyWithLogitsFuncOptions().reduction(
                           torch::kSum)) /
                   static_cast<double>(end - start);
      auto loss = recon + cfg.kl_weight * kl_divergence(mu, logvar);

      const double v = loss.item<double>();
      if (!std::isfinite(v)) {
        throw std::runtime_error(
            "VAE diverged at epoch " + std::to_string(epoch) +
            " (latent=" + std::to_string(cfg.latent_size) + "): loss=" +
            std::to_string(v));
      }
      opt.zero_grad();
      loss.backward();
      opt.step();
    }
  }
  return model;
}

double reconstruction_dice(ConvVAE& model,
                           const std::vector<torch::Tensor>& masks,
                           double threshold) {
  torch::NoGradGuard no_grad;
  double sum = 0.0;
  for (const auto& m : masks) {
    auto logits = model->reconstruct(m.unsqueeze(0)).squeeze(0);
    auto out = torch::sigmoid(logits) * 2.0 - 1.0;
    sum += eval::dice(core::binarize(out, threshold), m);
  }
  return sum / static_cast<double>(masks.size());
}

CapacityTable sweep_latents(const std::vector<torch::Tensor>& masks,
                            const std::vector<int64_t>& sizes,
                            const VAEConfig& base_cfg, uint64_t seed) {
  if (sizes.empty()) {
    throw std::invalid_argument("sweep_latents: no sizes given");
  }
  std::vector<int64_t> unique_sizes;
  std::set<int64_t> seen;
  for (int64_t s : sizes) {
    if (!seen.insert(s).second) {
      std::cerr << "sweep_latents: dropping duplicate latent size " << s
                << "\n";
      continue;
    }
    unique_sizes.push_back(s);
  }

  CapacityTable table;
  for (int64_t s : unique_sizes) {
    CapacityRow row;
    row.latent_size = s;
    try {
      VAEConfig cfg = base_cfg;
      cfg.latent_size = s;
      auto model =
          train_vae(masks, cfg, core::derive_seed(seed, "latent", {s}));
      row.dice = reconstruction_dice(model, masks);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.dice = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_capacity_table(const std::filesystem::path& dir,
                          const CapacityTable& table) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "capacity.csv");
  csv << "latent_size,dice,status\n";
  csv.precision(10);
  for (const auto& r : table.rows) {
    csv << r.latent_size << ',' << r.dice << ','
        << (r.ok ? "ok" : ("failed: " + r.error)) << "\n";
  }
  std::ofstream md(dir / "capacity.md");
  md << "| Latent size | Dice |\n|---|---|\n";
  md.precision(4);
  for (const auto& r : table.rows) {
    md << "| " << r.latent_size << " | " << std::fixed << r.dice * 100.0
       << " |\n";
  }
}

}  // namespace dualcycle::vae
