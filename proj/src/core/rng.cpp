#include "core/rng.hpp"

namespace dualcycle::core {

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t master, std::string_view tag,
                     std::initializer_list<int64_t> indices) {
  uint64_t state = master;
  uint64_t h = splitmix64(state);
  for (char c : tag) {
    state ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
    h ^= splitmix64(state);
  }
  for (int64_t idx : indices) {
    state ^= static_cast<uint64_t>(idx) + 0x632be59bd9b4e019ULL;
    h ^= splitmix64(state);
  }
  return h;
}

torch::Generator make_generator(uint64_t seed) {
  auto gen = at::detail::createCPUGenerator(seed);
  return gen;
}

torch::Tensor uniform(torch::Generator& gen, torch::IntArrayRef shape,
                      double low, double high, torch::ScalarType dtype) {
  auto u = torch::rand(shape, gen, torch::TensorOptions().dtype(dtype));
  return u * (high - low) + low;
}

}  // namespace dualcycle::core
