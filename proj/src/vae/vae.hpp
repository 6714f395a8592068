#ifndef DUALCYCLE_VAE_VAE_HPP
#define DUALCYCLE_VAE_VAE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace dualcycle::vae {

// Convolutional VAE used to probe how few latent dimensions suffice to
// reconstruct a mask family. A family that compresses into a handful of
// dimensions is one the noise path can plausibly learn from few samples.
struct VAEConfig {
  int64_t latent_size = 4;
  int64_t image_size = 64;
  int64_t base_width = 16;
  int64_t depth = 4;
  int64_t epochs = 50;
  double lr = 1e-3;
  double kl_weight = 1.0;
  int64_t batch_size = 16;

  void validate() const;
};

struct ConvVAEImpl : torch::nn::Module {
  explicit ConvVAEImpl(VAEConfig cfg);

  // (mu, logvar) of the diagonal Gaussian posterior.
  std::pair<torch::Tensor, torch::Tensor> encode(const torch::Tensor& x);
  // Pixel logits from a latent vector.
  torch::Tensor decode(const torch::Tensor& z);
  // Reconstruction logits at the posterior mean (no sampling).
  torch::Tensor reconstruct(const torch::Tensor& x);

  VAEConfig cfg;
  torch::nn::Sequential encoder{nullptr};
  torch::nn::Linear fc_mu{nullptr};
  torch::nn::Linear fc_logvar{nullptr};
  torch::nn::Linear fc_decode{nullptr};
  torch::nn::Sequential decoder{nullptr};
};

TORCH_MODULE(ConvVAE);

// KL(q(z|x) || N(0, I)) for a diagonal Gaussian, summed over latent
// dimensions and averaged over the batch. Exactly zero at mu=0, logvar=0.
torch::Tensor kl_divergence(const torch::Tensor& mu,
                            const torch::Tensor& logvar);

// Trains on {-1,+1} masks with pixel BCE plus kl_weight * KL.
// Seed-deterministic; throws with diagnostics if the loss goes non-finite.
ConvVAE train_vae(const std::vector<torch::Tensor>& masks,
                  const VAEConfig& cfg, uint64_t seed);

// Mean Dice between each mask and its binarized posterior-mean
// reconstruction. Threshold lives in the [-1, 1] output space.
double reconstruction_dice(ConvVAE& model,
                           const std::vector<torch::Tensor>& masks,
                           double threshold = 0.0);

struct CapacityRow {
  int64_t latent_size = 0;
  double dice = 0.0;
  bool ok = false;
  std::string error;
};

struct CapacityTable {
  std::vector<CapacityRow> rows;
};

// One trained VAE per latent size (duplicates dropped with a warning,
// per-size failures recorded while the sweep continues).
CapacityTable sweep_latents(const std::vector<torch::Tensor>& masks,
                            const std::vector<int64_t>& sizes,
                            const VAEConfig& base_cfg, uint64_t seed);

// CSV (latent_size, dice) and a small markdown table.
void write_capacity_table(const std::filesystem::path& dir,
                          const CapacityTable& table);

}  // namespace dualcycle::vae

#endif
