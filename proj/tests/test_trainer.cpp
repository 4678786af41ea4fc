#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <microcolor/trainer.hpp>

#include "temp_dir.hpp"

using namespace microcolor;

namespace {

EeCnnConfig tiny_config() {
  EeCnnConfig cfg;
  cfg.encoder_channels = {4, 6};
  cfg.stride2_layers = {1};
  cfg.embedding_dim = 5;
  cfg.fusion_channels = 8;
  cfg.decoder_stages = 1;
  return cfg;
}

ChromaMap random_chroma(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ChromaMap ab = ChromaMap::zeros(w, h);
  for (double& v : ab.a.v) v = uniform_range(rng, -60.0, 60.0);
  for (double& v : ab.b.v) v = uniform_range(rng, -60.0, 60.0);
  return ab;
}

Sample constant_sample(int w, int h, double l, double a, double b) {
  Sample s;
  s.l = Plane(w, h, l);
  s.ab = ChromaMap::zeros(w, h);
  std::fill(s.ab.a.v.begin(), s.ab.a.v.end(), a);
  std::fill(s.ab.b.v.begin(), s.ab.b.v.end(), b);
  s.source_id = "synthetic";
  return s;
}

Sample gradient_sample(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Sample s;
  s.l = Plane(w, h);
  for (double& v : s.l.v) v = uniform_range(rng, 10.0, 90.0);
  s.ab = random_chroma(w, h, derive_seed(seed, 1));
  s.source_id = "synthetic";
  return s;
}

bool same_weights(const ModelWeights& x, const ModelWeights& y) {
  if (x.blocks.size() != y.blocks.size()) return false;
  for (std::size_t i = 0; i < x.blocks.size(); ++i) {
    if (x.blocks[i].name != y.blocks[i].name) return false;
    if (x.blocks[i].value.v != y.blocks[i].value.v) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("chroma mse on a known single pixel", "[trainer]") {
  ChromaMap pred = ChromaMap::zeros(1, 1);
  pred.a.at(0, 0) = 2.0;
  pred.b.at(0, 0) = 4.0;
  const ChromaMap target = ChromaMap::zeros(1, 1);
  CHECK(mse_loss(pred, target) == 20.0);
  CHECK(mse_loss(target, target) == 0.0);
}

TEST_CASE("a uniform chroma offset of d costs exactly d squared", "[trainer]") {
  const ChromaMap target = random_chroma(9, 7, 42);
  for (double d : {0.5, 2.0, 10.0}) {
    CAPTURE(d);
    ChromaMap pred = target;
    for (double& v : pred.a.v) v += d;
    CHECK(mse_loss(pred, target) == Catch::Approx(d * d).epsilon(1e-9));
    // splitting the offset across both channels keeps the same magnitude
    ChromaMap split = target;
    const double c = d / std::sqrt(2.0);
    for (double& v : split.a.v) v += c;
    for (double& v : split.b.v) v += c;
    CHECK(mse_loss(split, target) == Catch::Approx(d * d).epsilon(1e-9));
  }
}

TEST_CASE("mse is symmetric and scales quadratically", "[trainer]") {
  const ChromaMap t = random_chroma(6, 5, 7);
  const ChromaMap p = random_chroma(6, 5, 8);
  CHECK(mse_loss(p, t) == Catch::Approx(mse_loss(t, p)).epsilon(1e-12));

  ChromaMap half = t;
  ChromaMap full = t;
  for (std::size_t i = 0; i < t.a.v.size(); ++i) {
    const double da = p.a.v[i] - t.a.v[i], db = p.b.v[i] - t.b.v[i];
    half.a.v[i] += 0.5 * da;
    half.b.v[i] += 0.5 * db;
    full.a.v[i] += da;
    full.b.v[i] += db;
  }
  CHECK(mse_loss(half, t) == Catch::Approx(0.25 * mse_loss(full, t)).epsilon(1e-12));

  CHECK_THROWS_AS(mse_loss(random_chroma(4, 4, 1), random_chroma(5, 4, 1)), shape_error);
}

TEST_CASE("early stopper waits out exactly its patience", "[trainer]") {
  EarlyStopper s(3, 0.0);
  CHECK(s.observe(10.0));
  CHECK(s.observe(9.0));
  CHECK(s.observe(8.0));
  CHECK(s.best() == 8.0);
  CHECK_FALSE(s.observe(8.0));
  CHECK_FALSE(s.should_stop());
  CHECK_FALSE(s.observe(8.3));
  CHECK_FALSE(s.should_stop());
  CHECK_FALSE(s.observe(8.0));
  CHECK(s.should_stop());

  // improvements below min_delta neither count nor move the best
  EarlyStopper strict(2, 0.5);
  CHECK(strict.observe(10.0));
  CHECK_FALSE(strict.observe(9.6));
  CHECK_FALSE(strict.observe(9.55));
  CHECK(strict.should_stop());
  CHECK(strict.best() == 10.0);
}

TEST_CASE("adam takes the textbook bias-corrected step", "[trainer]") {
  Array p({1});
  p.v[0] = 1.0;
  std::vector<ParamRef> params = {{"p", &p}};
  std::vector<Array> grads(1, Array({1}));
  grads[0].v[0] = 0.5;

  AdamOptimizer opt(0.1);
  opt.step(params, grads);
  // constant gradient: bias corrections cancel, step = lr * g / (|g| + eps)
  const double step = 0.1 * 0.5 / (0.5 + 1e-8);
  CHECK(p.v[0] == Catch::Approx(1.0 - step).epsilon(1e-12));
  opt.step(params, grads);
  CHECK(p.v[0] == Catch::Approx(1.0 - 2.0 * step).epsilon(1e-9));
  CHECK(opt.steps_taken() == 2);
}

TEST_CASE("training config validation", "[trainer]") {
  TrainConfig tc;
  tc.validate();
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(tc.validate(), argument_error);
  tc = TrainConfig{};
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), argument_error);
  tc = TrainConfig{};
  tc.patience = tc.max_epochs;
  CHECK_THROWS_AS(tc.validate(), argument_error);
  tc = TrainConfig{};
  tc.min_delta = -1.0;
  CHECK_THROWS_AS(tc.validate(), argument_error);
  tc = TrainConfig{};
  tc.checkpoint_every = -1;
  CHECK_THROWS_AS(tc.validate(), argument_error);
}

TEST_CASE("training is reproducible from the seed", "[trainer]") {
  const EeCnnConfig cfg = tiny_config();
  const ConstantEmbedder embedder = standard_embedder(cfg, 10);
  const std::vector<Sample> train = {gradient_sample(6, 6, 1), gradient_sample(6, 6, 2),
                                     gradient_sample(6, 6, 3)};
  const std::vector<Sample> val = {gradient_sample(6, 6, 4)};
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 2;
  tc.max_epochs = 5;
  tc.patience = 4;
  tc.min_delta = 0.0;
  tc.seed = 123;

  EeCnnModel m1(cfg, 10), m2(cfg, 10);
  const TrainReport r1 = train_eecnn(m1, train, val, embedder, tc);
  const TrainReport r2 = train_eecnn(m2, train, val, embedder, tc);
  CHECK(r1.train_losses == r2.train_losses);
  CHECK(r1.val_losses == r2.val_losses);
  CHECK(r1.best_epoch == r2.best_epoch);
  CHECK(same_weights(m1.export_weights(), m2.export_weights()));

  CHECK(r1.best_val == *std::min_element(r1.val_losses.begin(), r1.val_losses.end()));
  CHECK(r1.best_val == r1.val_losses[r1.best_epoch - 1]);
}

TEST_CASE("a single constant image is quickly memorized", "[trainer]") {
  const EeCnnConfig cfg = tiny_config();
  const ConstantEmbedder embedder = standard_embedder(cfg, 20);
  const std::vector<Sample> train = {constant_sample(12, 12, 50.0, 20.0, -15.0)};
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.batch_size = 1;
  tc.max_epochs = 60;
  tc.patience = 59;
  tc.min_delta = 0.0;
  tc.seed = 5;

  EeCnnModel model(cfg, 20);
  const TrainReport report = train_eecnn(model, train, {}, embedder, tc);
  REQUIRE(report.epochs_run >= 2);
  // empty validation split: the training loss doubles as the watched value
  CHECK(report.val_losses == report.train_losses);
  CHECK(report.train_losses.back() < 0.25 * report.train_losses.front());
}

TEST_CASE("a flat validation curve stops patience epochs after the best", "[trainer]") {
  const EeCnnConfig cfg = tiny_config();
  const ConstantEmbedder embedder = standard_embedder(cfg, 30);
  const std::vector<Sample> train = {gradient_sample(6, 6, 9)};
  TrainConfig tc;
  tc.learning_rate = 1e-4;
  tc.max_epochs = 50;
  tc.patience = 3;
  tc.min_delta = 1e18;  // no finite improvement can ever clear this bar
  tc.seed = 2;

  EeCnnModel model(cfg, 30);
  const TrainReport report = train_eecnn(model, train, {}, embedder, tc);
  CHECK(report.best_epoch == 1);
  CHECK(report.epochs_run == 1 + tc.patience);
}

TEST_CASE("the best checkpoint matches the weights handed back", "[trainer]") {
  TempDir dir("train-ckpt");
  const EeCnnConfig cfg = tiny_config();
  const ConstantEmbedder embedder = standard_embedder(cfg, 40);
  const std::vector<Sample> train = {gradient_sample(6, 6, 11), gradient_sample(6, 6, 12)};
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.max_epochs = 4;
  tc.patience = 3;
  tc.seed = 9;
  tc.checkpoint_dir = dir.path;
  tc.checkpoint_every = 2;

  EeCnnModel model(cfg, 40);
  const TrainReport report = train_eecnn(model, train, {}, embedder, tc);
  REQUIRE_FALSE(report.best_checkpoint_path.empty());
  REQUIRE(std::filesystem::exists(report.best_checkpoint_path));
  CHECK(same_weights(load_checkpoint(report.best_checkpoint_path), model.export_weights()));

  // periodic snapshots land on the configured cadence
  CHECK(std::filesystem::exists(dir / "epoch_0002.ckpt"));
  if (report.epochs_run >= 4) CHECK(std::filesystem::exists(dir / "epoch_0004.ckpt"));

  // and a checkpointed model keeps predicting exactly the same
  const ModelWeights loaded = load_checkpoint(report.best_checkpoint_path);
  EeCnnModel restored(cfg, loaded);
  const Plane probe = Plane(6, 6, 33.0);
  const ChromaMap a = model.forward(probe, embedder);
  const ChromaMap b = restored.forward(probe, embedder);
  CHECK(a.a.v == b.a.v);
  CHECK(a.b.v == b.b.v);
}

TEST_CASE("a non-finite loss aborts with the failing step", "[trainer]") {
  const EeCnnConfig cfg = tiny_config();
  const ConstantEmbedder embedder = standard_embedder(cfg, 50);
  Sample poisoned = constant_sample(6, 6, 50.0, 5.0, 5.0);
  poisoned.ab.a.at(0, 0) = std::numeric_limits<double>::infinity();
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.patience = 1;

  EeCnnModel model(cfg, 50);
  try {
    train_eecnn(model, {poisoned}, {}, embedder, tc);
    FAIL("expected divergence_error");
  } catch (const divergence_error& e) {
    CHECK(e.step == 1);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("not finite"));
  }

  CHECK_THROWS_AS(train_eecnn(model, {}, {}, embedder, tc), argument_error);
}

TEST_CASE("the loss log is a plain csv", "[trainer]") {
  TempDir dir("loss-log");
  TrainReport report;
  report.train_losses = {12.5, 3.125};
  report.val_losses = {14.0, 4.5};
  const auto path = dir / "loss.csv";
  report.write_csv(path);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "epoch,train_loss,val_loss");
  REQUIRE(std::getline(in, line));
  CHECK(line == "1,12.5,14");
  REQUIRE(std::getline(in, line));
  CHECK(line == "2,3.125,4.5");
  CHECK_FALSE(std::getline(in, line));

  CHECK_THROWS_AS(report.write_csv(dir / "no-such-dir" / "loss.csv"), io_error);
}
