#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "core/grid.hpp"
#include "data/noise.hpp"
#include "models/discriminator.hpp"
#include "models/generator.hpp"
#include "models/groups.hpp"
#include "testutil.hpp"

using namespace dualcycle;
using testutil::rel_err;

namespace {

models::GeneratorSpec desk_spec() {
  models::GeneratorSpec s;
  s.input_size = 64;
  s.input_channels = 1;
  s.output_channels = 1;
  s.base_width = 8;
  s.depth = 3;
  return s;
}

models::GeneratorSpec toy_spec() {
  models::GeneratorSpec s;
  s.input_size = 16;
  s.input_channels = 1;
  s.output_channels = 1;
  s.base_width = 4;
  s.depth = 2;
  return s;
}

int64_t param_count(const models::DualPathUNet& g) {
  int64_t n = 0;
  for (const auto& p : g->parameters()) n += p.numel();
  return n;
}

uint64_t full_checksum(const models::DualPathUNet& g) {
  return models::group_checksum(g->parameters());
}

}  // namespace

TEST_CASE("generator spec validation") {
  auto s = desk_spec();
  CHECK_NOTHROW(s.validate());
  s.input_size = 100;  // not divisible by 2^3
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = desk_spec();
  s.depth = 5;  // deepest 2x2 < 4x4 code
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = desk_spec();
  s.base_width = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS(models::build_generator(s, 0), std::invalid_argument);
}

TEST_CASE("generator spec json round trip") {
  auto s = desk_spec();
  s.skip_mode_noise_path = models::NoiseSkipMode::Zeros;
  s.stop_encoder_grad_noise_path = false;
  nlohmann::json j = s;
  models::GeneratorSpec back = j;
  nlohmann::json j2 = back;
  CHECK(j == j2);
}

TEST_CASE("encoder stage sizes halve per stage") {
  auto gen = models::build_generator(desk_spec(), 1);
  auto feats = gen->encode(torch::rand({1, 1, 64, 64}) * 2 - 1);
  REQUIRE(feats.size() == 3);
  CHECK(feats[0].size(-1) == 32);
  CHECK(feats[1].size(-1) == 16);
  CHECK(feats[2].size(-1) == 8);
}

TEST_CASE("builds are seed-deterministic") {
  auto a = models::build_generator(desk_spec(), 7);
  auto b = models::build_generator(desk_spec(), 7);
  auto c = models::build_generator(desk_spec(), 8);
  CHECK(param_count(a) == param_count(b));
  CHECK(full_checksum(a) == full_checksum(b));
  CHECK(full_checksum(a) != full_checksum(c));
}

TEST_CASE("image path output shape and range") {
  auto gen = models::build_generator(desk_spec(), 3);
  torch::NoGradGuard no_grad;
  auto out = gen->forward_image(torch::rand({2, 1, 64, 64}) * 2 - 1);
  CHECK(out.sizes() == torch::IntArrayRef({2, 1, 64, 64}));
  CHECK(out.min().item<double>() >= -1.0);
  CHECK(out.max().item<double>() <= 1.0);

  // default paper-scale spec produces 1x256x256
  auto big = models::build_generator(models::GeneratorSpec{}, 0);
  auto big_out = big->forward_image(torch::rand({1, 256, 256}) * 2 - 1);
  CHECK(big_out.sizes() == torch::IntArrayRef({1, 256, 256}));

  CHECK_THROWS_AS(gen->forward_image(torch::rand({1, 32, 32})),
                  std::invalid_argument);
}

TEST_CASE("outputs stay in [-1,1] across many random inputs") {
  auto gen = models::build_generator(toy_spec(), 5);
  torch::NoGradGuard no_grad;
  torch::manual_seed(2);
  for (int i = 0; i < 1000; ++i) {
    auto out = gen->forward_image(torch::rand({1, 1, 16, 16}) * 2 - 1);
    CHECK(out.min().item<double>() >= -1.0);
    CHECK(out.max().item<double>() <= 1.0);
  }
}

TEST_CASE("inference is deterministic") {
  auto gen = models::build_generator(desk_spec(), 9);
  torch::NoGradGuard no_grad;
  auto x = torch::rand({1, 1, 64, 64}) * 2 - 1;
  CHECK(torch::equal(gen->forward_image(x), gen->forward_image(x)));
  CHECK(torch::equal(gen->forward_noise(x), gen->forward_noise(x)));
}

TEST_CASE("noise code is exactly 1x4x4 and noise output matches image shape") {
  auto gen = models::build_generator(desk_spec(), 11);
  torch::NoGradGuard no_grad;
  auto noise = torch::rand({2, 1, 64, 64}) * 2 - 1;
  auto code = gen->noise_code(noise);
  CHECK(code.sizes() == torch::IntArrayRef({2, 1, 4, 4}));
  auto out = gen->forward_noise(noise);
  CHECK(out.sizes() == torch::IntArrayRef({2, 1, 64, 64}));

  // paper-scale default too
  auto big = models::build_generator(models::GeneratorSpec{}, 0);
  auto big_code = big->noise_code(torch::rand({1, 1, 256, 256}) * 2 - 1);
  CHECK(big_code.sizes() == torch::IntArrayRef({1, 1, 4, 4}));
}

TEST_CASE("zeroed decoder and bottleneck give exactly zero output") {
  auto gen = models::build_generator(desk_spec(), 13);
  {
    torch::NoGradGuard no_grad;
    for (auto& p :
         models::group_parameters(gen, models::ParamGroup::Decoder)) {
      p.zero_();
    }
    for (auto& p :
         models::group_parameters(gen, models::ParamGroup::NoiseBottleneck)) {
      p.zero_();
    }
  }
  torch::NoGradGuard no_grad;
  auto out = gen->forward_noise(torch::rand({1, 1, 64, 64}) * 2 - 1);
  CHECK(out.abs().max().item<double>() == 0.0);
}

TEST_CASE("noise path ignores non-deepest encoder features under inject_code") {
  auto gen = models::build_generator(desk_spec(), 17);
  torch::NoGradGuard no_grad;
  auto x = torch::rand({1, 1, 64, 64}) * 2 - 1;
  auto feats = gen->encode(x);
  auto base = gen->decode_noise(feats);

  auto perturbed = feats;
  perturbed[0] = feats[0] + 1.0;
  perturbed[1] = feats[1] - 0.5;
  CHECK(torch::equal(gen->decode_noise(perturbed), base));

  // deepest features do matter
  auto deep = feats;
  deep[2] = feats[2] + 1.0;
  CHECK(!torch::equal(gen->decode_noise(deep), base));

  // and with live skips the shallow features matter again
  auto live_spec = desk_spec();
  live_spec.skip_mode_noise_path = models::NoiseSkipMode::LiveSkips;
  auto live = models::build_generator(live_spec, 17);
  auto live_feats = live->encode(x);
  auto live_base = live->decode_noise(live_feats);
  auto live_pert = live_feats;
  live_pert[0] = live_feats[0] + 1.0;
  CHECK(!torch::equal(live->decode_noise(live_pert), live_base));
}

TEST_CASE("zeros skip mode still routes the code") {
  auto spec = desk_spec();
  spec.skip_mode_noise_path = models::NoiseSkipMode::Zeros;
  auto gen = models::build_generator(spec, 19);
  torch::NoGradGuard no_grad;
  auto a = gen->forward_noise(torch::rand({1, 1, 64, 64}) * 2 - 1);
  auto b = gen->forward_noise(torch::rand({1, 1, 64, 64}) * 2 - 1);
  CHECK(!torch::equal(a, b));  // different noise, different output
}

TEST_CASE("both paths share encoder and decoder weights") {
  auto gen = models::build_generator(desk_spec(), 23);
  torch::NoGradGuard no_grad;
  auto x = torch::rand({1, 1, 64, 64}) * 2 - 1;
  auto img_before = gen->forward_image(x);
  auto noise_before = gen->forward_noise(x);

  auto decoder = models::group_parameters(gen, models::ParamGroup::Decoder);
  decoder.front().add_(0.05);

  CHECK(!torch::equal(gen->forward_image(x), img_before));
  CHECK(!torch::equal(gen->forward_noise(x), noise_before));
}

TEST_CASE("gradient routing: encoder is hard-stopped on the noise path") {
  auto gen = models::build_generator(toy_spec(), 29);
  gen->to(torch::kFloat64);
  auto noise = torch::rand({1, 1, 16, 16}, torch::kFloat64) * 2 - 1;
  auto target = torch::rand({1, 1, 16, 16}, torch::kFloat64) * 2 - 1;

  auto loss = (gen->forward_noise(noise) - target).abs().mean();
  loss.backward();

  for (auto group : {models::ParamGroup::Encoder, models::ParamGroup::Bottleneck}) {
    for (const auto& p : models::group_parameters(gen, group)) {
      const bool zero_or_absent =
          !p.grad().defined() || p.grad().abs().max().item<double>() == 0.0;
      CHECK(zero_or_absent);
    }
  }
  bool decoder_nonzero = false;
  for (const auto& p :
       models::group_parameters(gen, models::ParamGroup::Decoder)) {
    if (p.grad().defined() && p.grad().abs().max().item<double>() > 0.0) {
      decoder_nonzero = true;
    }
  }
  CHECK(decoder_nonzero);
  bool nb_nonzero = false;
  for (const auto& p :
       models::group_parameters(gen, models::ParamGroup::NoiseBottleneck)) {
    if (p.grad().defined() && p.grad().abs().max().item<double>() > 0.0) {
      nb_nonzero = true;
    }
  }
  CHECK(nb_nonzero);
}

TEST_CASE("gradient routing: image path reaches every group but the bottleneck collapse") {
  auto gen = models::build_generator(toy_spec(), 31);
  gen->to(torch::kFloat64);
  auto x = torch::rand({1, 1, 16, 16}, torch::kFloat64) * 2 - 1;
  auto target = torch::rand({1, 1, 16, 16}, torch::kFloat64) * 2 - 1;
  (gen->forward_image(x) - target).abs().mean().backward();

  for (auto group : {models::ParamGroup::Encoder, models::ParamGroup::Bottleneck,
                     models::ParamGroup::Decoder}) {
    bool nonzero = false;
    for (const auto& p : models::group_parameters(gen, group)) {
      if (p.grad().defined() && p.grad().abs().max().item<double>() > 0.0) {
        nonzero = true;
      }
    }
    CHECK(nonzero);
  }
  for (const auto& p :
       models::group_parameters(gen, models::ParamGroup::NoiseBottleneck)) {
    CHECK(!p.grad().defined());
  }
}

TEST_CASE("noise-path parameter gradients match finite differences") {
  auto gen = models::build_generator(toy_spec(), 37);
  gen->to(torch::kFloat64);
  auto noise = torch::rand({1, 1, 16, 16}, torch::kFloat64) * 2 - 1;
  auto target = torch::rand({1, 1, 16, 16}, torch::kFloat64) * 2 - 1;

  auto loss_value = [&]() {
    torch::NoGradGuard no_grad;
    return (gen->forward_noise(noise) - target).abs().mean().item<double>();
  };
  (gen->forward_noise(noise) - target).abs().mean().backward();

  const double h = 1e-5;
  for (auto group :
       {models::ParamGroup::Decoder, models::ParamGroup::NoiseBottleneck}) {
    for (auto& p : models::group_parameters(gen, group)) {
      if (!p.grad().defined()) continue;
      auto flat = p.detach().view(-1);
      auto grad = p.grad().view(-1);
      const int64_t step = std::max<int64_t>(1, flat.numel() / 5);
      for (int64_t k = 0; k < flat.numel(); k += step) {
        const double analytic = grad[k].item<double>();
        if (std::abs(analytic) < 1e-7) continue;
        const double orig = flat[k].item<double>();
        flat.index_put_({k}, orig + h);
        const double up = loss_value();
        flat.index_put_({k}, orig - h);
        const double dn = loss_value();
        flat.index_put_({k}, orig);
        CHECK(rel_err(analytic, (up - dn) / (2.0 * h)) < 1e-3);
      }
    }
  }
}

TEST_CASE("scenario-style specs let noise gradients reach the encoder") {
  auto spec = toy_spec();
  spec.stop_encoder_grad_noise_path = false;
  auto gen = models::build_generator(spec, 41);
  auto noise = torch::rand({1, 1, 16, 16}) * 2 - 1;
  gen->forward_noise(noise).abs().mean().backward();
  bool encoder_nonzero = false;
  for (const auto& p :
       models::group_parameters(gen, models::ParamGroup::Encoder)) {
    if (p.grad().defined() && p.grad().abs().max().item<double>() > 0.0) {
      encoder_nonzero = true;
    }
  }
  CHECK(encoder_nonzero);
}

TEST_CASE("parameter groups partition the generator exactly") {
  auto gen = models::build_generator(desk_spec(), 43);
  std::set<void*> seen;
  int64_t grouped = 0;
  for (auto g : {models::ParamGroup::Encoder, models::ParamGroup::Bottleneck,
                 models::ParamGroup::Decoder, models::ParamGroup::NoiseBottleneck}) {
    for (const auto& p : models::group_parameters(gen, g)) {
      CHECK(seen.insert(p.unsafeGetTensorImpl()).second);
      ++grouped;
    }
  }
  CHECK(grouped == (int64_t)gen->parameters().size());
  CHECK_THROWS_AS(models::group_parameters(gen, models::ParamGroup::Discriminator),
                  std::invalid_argument);
}

TEST_CASE("set_trainable toggles groups and rejects unknown names") {
  auto gen = models::build_generator(desk_spec(), 47);
  models::set_trainable(gen, "encoder", false);
  for (const auto& p :
       models::group_parameters(gen, models::ParamGroup::Encoder)) {
    CHECK(!p.requires_grad());
  }
  models::set_trainable(gen, "encoder", true);
  for (const auto& p :
       models::group_parameters(gen, models::ParamGroup::Encoder)) {
    CHECK(p.requires_grad());
  }
  CHECK_THROWS_AS(models::set_trainable(gen, "unknown", false),
                  std::invalid_argument);
}

TEST_CASE("patch discriminator") {
  models::DiscriminatorSpec spec;
  spec.input_size = 64;
  spec.conditioning_channels = 1;
  spec.candidate_channels = 1;
  spec.base_width = 8;
  spec.depth = 3;

  auto d1 = models::build_discriminator(spec, 51);
  auto d2 = models::build_discriminator(spec, 51);
  CHECK(models::group_checksum(d1->parameters()) ==
        models::group_checksum(d2->parameters()));

  torch::NoGradGuard no_grad;
  auto cond = torch::rand({1, 1, 64, 64}) * 2 - 1;
  auto cand = torch::rand({1, 1, 64, 64}) * 2 - 1;
  auto logits = d1->forward(cond, cand);
  CHECK(logits.size(-1) >= 1);
  CHECK(logits.size(-3) == 1);
  CHECK(torch::isfinite(logits).all().item<bool>());

  // swapping which channel carries the candidate changes the verdict
  CHECK(!torch::equal(d1->forward(cond, cand), d1->forward(cand, cond)));

  // unconditional variant consumes the candidate alone
  models::DiscriminatorSpec uncond = spec;
  uncond.conditioning_channels = 0;
  auto du = models::build_discriminator(uncond, 52);
  CHECK(du->forward(cond, cand).size(-1) >= 1);
  CHECK(torch::equal(du->forward(cond, cand), du->forward(cand)));

  models::DiscriminatorSpec bad = spec;
  bad.depth = 6;  // 64 >> 6 = 1 < 2
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(d1->forward(torch::rand({1, 3, 64, 64})),
                  std::invalid_argument);
}
