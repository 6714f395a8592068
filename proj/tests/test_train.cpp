#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "core/grid.hpp"
#include "data/synthetic.hpp"
#include "models/groups.hpp"
#include "train/checkpoint.hpp"
#include "train/schedule.hpp"
#include "train/trainer.hpp"
#include "testutil.hpp"

using namespace dualcycle;

namespace {

train::TrainerConfig micro_config(const std::filesystem::path& out,
                                  uint64_t seed = 3) {
  train::TrainerConfig cfg;
  cfg.generator.input_size = 32;
  cfg.generator.base_width = 8;
  cfg.generator.depth = 3;
  cfg.discriminator.input_size = 32;
  cfg.discriminator.base_width = 8;
  cfg.discriminator.depth = 2;
  cfg.schedule.lr0 = 2e-4;
  cfg.schedule.total_epochs = 2;
  cfg.schedule.constant_epochs = 1;
  cfg.schedule.batch_size = 2;
  cfg.noise.target_size = 32;
  cfg.preprocess = {32, 32};
  cfg.seed = seed;
  cfg.checkpoint_every = 1;
  cfg.sample_every = 2;
  cfg.out_dir = out.string();
  return cfg;
}

data::DatasetSplits micro_data(int64_t n = 6) {
  auto all = data::synthesize_ellipse_dataset(n, 32, 0.4, 55);
  data::DatasetSplits splits;
  splits.train = all;
  return splits;
}

train::Batch micro_batch(int64_t n = 2) {
  auto ds = data::synthesize_ellipse_dataset(n, 32, 0.4, 66);
  return train::make_batch(ds);
}

uint64_t gen_group_sum(const train::TrainState& st, models::ParamGroup g) {
  return models::group_checksum(models::group_parameters(st.generator, g));
}

uint64_t disc_sum(const train::TrainState& st) {
  return models::group_checksum(st.discriminator->parameters());
}

}  // namespace

TEST_CASE("learning-rate schedule hits the published anchor points") {
  train::TrainSchedule hc18{2e-4, 200, 100, 1};
  CHECK(train::lr_at(50, hc18) == 2e-4);
  CHECK(train::lr_at(100, hc18) == 2e-4);  // continuous at the knee
  CHECK(train::lr_at(150, hc18) == 1e-4);
  CHECK(train::lr_at(200, hc18) == 0.0);

  train::TrainSchedule montgomery{2e-4, 50, 30, 1};
  CHECK(train::lr_at(10, montgomery) == 2e-4);
  CHECK(train::lr_at(40, montgomery) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(train::lr_at(50, montgomery) == 0.0);

  CHECK_THROWS_AS(train::lr_at(-1, hc18), std::out_of_range);
  CHECK_THROWS_AS(train::lr_at(201, hc18), std::out_of_range);

  double prev = train::lr_at(0, hc18);
  for (int64_t e = 1; e <= 200; ++e) {
    const double cur = train::lr_at(e, hc18);
    CHECK(cur <= prev);
    prev = cur;
  }

  train::TrainSchedule bad{2e-4, 10, 0, 1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  train::TrainSchedule bad2{2e-4, 10, 11, 1};
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}

TEST_CASE("cycle policy needs at least one cycle") {
  train::CyclePolicy p;
  p.image_cycle_enabled = false;
  p.noise_cycle_enabled = false;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("one dual-cycle iteration: finite fields and the exact objective") {
  testutil::TempDir tmp("iter");
  train::DualCycleTrainer trainer(micro_config(tmp.path() / "run"));
  auto rec = trainer.train_iteration(micro_batch());

  for (double v : {rec.d_image, rec.g_adv_image, rec.l1, rec.d_noise,
                   rec.g_adv_noise, rec.g_total}) {
    CHECK(std::isfinite(v));
  }
  CHECK(rec.g_total == losses::total_generator_objective(
                           rec.l1, rec.g_adv_image, rec.g_adv_noise,
                           trainer.config().weights));
  CHECK(rec.d_image > 0.0);
  CHECK(rec.l1 > 0.0);
}

TEST_CASE("disabled noise cycle reduces to plain supervised-adversarial training") {
  testutil::TempDir tmp("p2p");
  auto cfg = micro_config(tmp.path() / "run");
  cfg.policy.noise_cycle_enabled = false;
  train::DualCycleTrainer trainer(cfg);

  const auto nb_before =
      gen_group_sum(trainer.state(), models::ParamGroup::NoiseBottleneck);
  const auto dec_before =
      gen_group_sum(trainer.state(), models::ParamGroup::Decoder);
  for (int i = 0; i < 3; ++i) {
    auto rec = trainer.train_iteration(micro_batch());
    CHECK(rec.d_noise == 0.0);
    CHECK(rec.g_adv_noise == 0.0);
    CHECK(rec.g_total ==
          10.0 * rec.l1 + rec.g_adv_image);  // degenerates to pix2pix form
  }
  CHECK(gen_group_sum(trainer.state(), models::ParamGroup::NoiseBottleneck) ==
        nb_before);
  CHECK(gen_group_sum(trainer.state(), models::ParamGroup::Decoder) !=
        dec_before);
}

TEST_CASE("noise cycle never touches the encoder") {
  testutil::TempDir tmp("freeze");
  auto cfg = micro_config(tmp.path() / "run");
  cfg.policy.image_cycle_enabled = false;  // isolate the noise cycle
  train::DualCycleTrainer trainer(cfg);

  const auto enc = gen_group_sum(trainer.state(), models::ParamGroup::Encoder);
  const auto bott =
      gen_group_sum(trainer.state(), models::ParamGroup::Bottleneck);
  const auto dec = gen_group_sum(trainer.state(), models::ParamGroup::Decoder);
  const auto nb =
      gen_group_sum(trainer.state(), models::ParamGroup::NoiseBottleneck);

  for (int i = 0; i < 10; ++i) {
    trainer.train_iteration(micro_batch());
  }
  CHECK(gen_group_sum(trainer.state(), models::ParamGroup::Encoder) == enc);
  CHECK(gen_group_sum(trainer.state(), models::ParamGroup::Bottleneck) == bott);
  CHECK(gen_group_sum(trainer.state(), models::ParamGroup::Decoder) != dec);
  CHECK(gen_group_sum(trainer.state(), models::ParamGroup::NoiseBottleneck) !=
        nb);
}

TEST_CASE("enabling the image cycle afterwards updates the encoder again") {
  testutil::TempDir tmp("thaw");
  train::DualCycleTrainer trainer(micro_config(tmp.path() / "run"));
  const auto enc = gen_group_sum(trainer.state(), models::ParamGroup::Encoder);
  trainer.train_iteration(micro_batch());
  CHECK(gen_group_sum(trainer.state(), models::ParamGroup::Encoder) != enc);
}

TEST_CASE("freeze alternation between the two players") {
  testutil::TempDir tmp("alt");
  train::DualCycleTrainer trainer(micro_config(tmp.path() / "run"));
  auto batch = micro_batch();

  auto gen_sum = [&] {
    return models::group_checksum(trainer.state().generator->parameters());
  };

  const auto g0 = gen_sum();
  const auto d0 = disc_sum(trainer.state());
  trainer.discriminator_step_image(batch);
  CHECK(gen_sum() == g0);                      // generator untouched
  CHECK(disc_sum(trainer.state()) != d0);      // discriminator moved

  const auto d1 = disc_sum(trainer.state());
  trainer.generator_step_image(batch);
  CHECK(disc_sum(trainer.state()) == d1);      // discriminator untouched
  CHECK(gen_sum() != g0);                      // generator moved

  const auto g2 = gen_sum();
  auto noise = trainer.sample_noise_for_iteration(batch.images.size(0));
  trainer.discriminator_step_noise(batch, noise);
  CHECK(gen_sum() == g2);

  const auto d2 = disc_sum(trainer.state());
  trainer.generator_step_noise(noise);
  CHECK(disc_sum(trainer.state()) == d2);
}

TEST_CASE("noise-conditioned real pairs are accepted") {
  testutil::TempDir tmp("src");
  auto cfg = micro_config(tmp.path() / "run");
  cfg.policy.noise_real_pair_source =
      train::CyclePolicy::RealPairSource::NoiseGtPair;
  train::DualCycleTrainer trainer(cfg);
  auto rec = trainer.train_iteration(micro_batch());
  CHECK(std::isfinite(rec.d_noise));
}

TEST_CASE("checkpoints round-trip bitwise") {
  testutil::TempDir tmp("ckpt");
  auto cfg = micro_config(tmp.path() / "run");
  train::DualCycleTrainer trainer(cfg);
  for (int i = 0; i < 2; ++i) trainer.train_iteration(micro_batch());
  auto& st = trainer.state();
  st.epoch = 1;

  auto file = tmp.path() / "state.ckpt";
  train::save_checkpoint(file, st);
  auto back = train::load_checkpoint(file);

  CHECK(back.epoch == st.epoch);
  CHECK(back.iteration == st.iteration);
  CHECK(back.master_seed == st.master_seed);
  for (auto g : {models::ParamGroup::Encoder, models::ParamGroup::Bottleneck,
                 models::ParamGroup::Decoder, models::ParamGroup::NoiseBottleneck}) {
    CHECK(gen_group_sum(back, g) == gen_group_sum(st, g));
  }
  CHECK(disc_sum(back) == disc_sum(st));

  REQUIRE(back.g_opt->entries().size() == st.g_opt->entries().size());
  for (size_t i = 0; i < st.g_opt->entries().size(); ++i) {
    CHECK(torch::equal(back.g_opt->entries()[i].m, st.g_opt->entries()[i].m));
    CHECK(torch::equal(back.g_opt->entries()[i].v, st.g_opt->entries()[i].v));
    CHECK(back.g_opt->entries()[i].step_count ==
          st.g_opt->entries()[i].step_count);
  }
  REQUIRE(back.history.size() == st.history.size());
  for (size_t i = 0; i < st.history.size(); ++i) {
    CHECK(back.history[i].g_total == st.history[i].g_total);
  }
}

TEST_CASE("corrupt checkpoints are rejected without partial state") {
  testutil::TempDir tmp("corrupt");
  auto cfg = micro_config(tmp.path() / "run");
  train::DualCycleTrainer trainer(cfg);
  trainer.train_iteration(micro_batch());
  auto file = tmp.path() / "state.ckpt";
  train::save_checkpoint(file, trainer.state());

  SUBCASE("truncated payload names the tensor") {
    auto truncated = tmp.path() / "short.ckpt";
    std::filesystem::copy_file(file, truncated);
    std::filesystem::resize_file(truncated,
                                 std::filesystem::file_size(truncated) - 257);
    CHECK_THROWS_WITH_AS(train::load_checkpoint(truncated),
                         doctest::Contains("truncated"), std::runtime_error);
  }

  SUBCASE("not a checkpoint at all") {
    auto junk = tmp.path() / "junk.ckpt";
    std::ofstream(junk) << "definitely not a checkpoint";
    CHECK_THROWS_AS(train::load_checkpoint(junk), std::runtime_error);
  }

  SUBCASE("spec mismatch is called out explicitly") {
    auto other = micro_config(tmp.path() / "other");
    other.generator.base_width = 4;
    CHECK_THROWS_WITH_AS(
        train::load_checkpoint(file, other.generator, other.discriminator),
        doctest::Contains("spec mismatch"), std::runtime_error);
    CHECK_NOTHROW(
        train::load_checkpoint(file, cfg.generator, cfg.discriminator));
  }
}

TEST_CASE("run bookkeeping: csv rows, checkpoints, samples, curves") {
  testutil::TempDir tmp("run");
  auto cfg = micro_config(tmp.path() / "run");
  auto splits = micro_data(6);  // batch 2 -> 3 iterations per epoch
  train::run_training(cfg, splits);

  std::ifstream csv(std::filesystem::path(cfg.out_dir) / "losses.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == losses::loss_csv_header());
  int rows = 0;
  int64_t expect_iter = 0;
  while (std::getline(csv, line)) {
    auto rec = losses::parse_csv_row(line);
    CHECK(rec.iteration == expect_iter++);
    CHECK(rec.g_total == losses::total_generator_objective(
                             rec.l1, rec.g_adv_image, rec.g_adv_noise,
                             cfg.weights));
    ++rows;
  }
  CHECK(rows == 6);

  auto out = std::filesystem::path(cfg.out_dir);
  CHECK(std::filesystem::exists(out / "config.json"));
  CHECK(std::filesystem::exists(out / "checkpoints" / "epoch_1.ckpt"));
  CHECK(std::filesystem::exists(out / "checkpoints" / "epoch_2.ckpt"));
  CHECK(std::filesystem::exists(out / "samples" / "epoch_2_imagepath.png"));
  CHECK(std::filesystem::exists(out / "samples" / "epoch_2_noisepath.png"));
  CHECK(std::filesystem::exists(out / "training_curves.png"));
}

TEST_CASE("identical configs produce identical loss files") {
  testutil::TempDir tmp("det");
  auto splits = micro_data(4);
  auto cfg_a = micro_config(tmp.path() / "a", 17);
  auto cfg_b = micro_config(tmp.path() / "b", 17);
  train::run_training(cfg_a, splits);
  train::run_training(cfg_b, splits);

  std::ifstream fa(std::filesystem::path(cfg_a.out_dir) / "losses.csv");
  std::ifstream fb(std::filesystem::path(cfg_b.out_dir) / "losses.csv");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(!sa.str().empty());
}

TEST_CASE("interrupted runs resume on the exact trajectory") {
  testutil::TempDir tmp("resume");
  auto splits = micro_data(4);

  auto full_cfg = micro_config(tmp.path() / "full", 23);
  train::run_training(full_cfg, splits);

  auto part_cfg = micro_config(tmp.path() / "part", 23);
  part_cfg.stop_after_epoch = 1;
  train::run_training(part_cfg, splits);
  auto resumed_cfg = part_cfg;
  resumed_cfg.stop_after_epoch = 0;
  train::run_training(
      resumed_cfg, splits,
      std::filesystem::path(part_cfg.out_dir) / "checkpoints" / "epoch_1.ckpt");

  std::ifstream ff(std::filesystem::path(full_cfg.out_dir) / "losses.csv");
  std::ifstream fp(std::filesystem::path(part_cfg.out_dir) / "losses.csv");
  std::string lf, lp;
  std::getline(ff, lf);
  std::getline(fp, lp);
  int rows = 0;
  while (std::getline(ff, lf)) {
    REQUIRE(std::getline(fp, lp));
    auto a = losses::parse_csv_row(lf);
    auto b = losses::parse_csv_row(lp);
    CHECK(std::abs(a.g_total - b.g_total) <= 1e-6);
    CHECK(std::abs(a.d_image - b.d_image) <= 1e-6);
    CHECK(std::abs(a.d_noise - b.d_noise) <= 1e-6);
    ++rows;
  }
  CHECK(rows == 8);  // 2 epochs x 2 batches x (full run only)
}

TEST_CASE("supervised degenerate run: per-epoch L1 strictly decreases") {
  testutil::TempDir tmp("l1");
  auto cfg = micro_config(tmp.path() / "run", 31);
  cfg.policy.noise_cycle_enabled = false;
  cfg.weights.beta = 0.0;  // pure L1 training
  cfg.schedule.total_epochs = 5;
  cfg.schedule.constant_epochs = 5;
  cfg.schedule.batch_size = 2;
  cfg.checkpoint_every = 0;
  cfg.sample_every = 0;
  auto splits = micro_data(8);
  train::DualCycleTrainer trainer(cfg);
  trainer.run(splits);

  const auto& hist = trainer.state().history;
  REQUIRE(hist.size() == 20);  // 5 epochs x 4 iterations
  std::vector<double> epoch_means;
  for (int e = 0; e < 5; ++e) {
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) sum += hist[e * 4 + i].l1;
    epoch_means.push_back(sum / 4.0);
  }
  for (int e = 1; e < 5; ++e) {
    CHECK(epoch_means[e] < epoch_means[e - 1]);
  }
}

TEST_CASE("non-finite losses abort with the offending term") {
  testutil::TempDir tmp("abort");
  auto cfg = micro_config(tmp.path() / "run");
  train::DualCycleTrainer trainer(cfg);
  {
    torch::NoGradGuard no_grad;
    trainer.state().generator->noise_collapse->weight.fill_(
        std::numeric_limits<float>::quiet_NaN());
  }
  CHECK_THROWS_WITH_AS(trainer.train_iteration(micro_batch()),
                       doctest::Contains("d_noise"), std::runtime_error);
}
