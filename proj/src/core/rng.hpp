#ifndef DUALCYCLE_CORE_RNG_HPP
#define DUALCYCLE_CORE_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <string_view>

#include <torch/torch.h>

namespace dualcycle::core {

// splitmix64 step; the workhorse behind all seed derivation.
uint64_t splitmix64(uint64_t& state);

// Hash-combines a master seed with a role tag and stream indices so every
// consumer of randomness (crop offsets, noise draws, shuffles, weight init)
// gets an independent, resumable stream. No hidden global state anywhere.
uint64_t derive_seed(uint64_t master, std::string_view tag,
                     std::initializer_list<int64_t> indices = {});

// Fresh CPU generator seeded with `seed`.
torch::Generator make_generator(uint64_t seed);

// i.i.d. Uniform[low, high) tensor drawn from `gen`.
torch::Tensor uniform(torch::Generator& gen, torch::IntArrayRef shape,
                      double low, double high,
                      torch::ScalarType dtype = torch::kFloat32);

}  // namespace dualcycle::core

#endif
