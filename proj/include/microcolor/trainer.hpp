#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "microcolor/dataset.hpp"
#include "microcolor/eecnn.hpp"
#include "microcolor/rng.hpp"

// Optimization loop for the colorization network: Adam over mini-batches of
// per-sample backprop gradients, with early stopping on a held-out split and
// periodic checkpoints. All reported losses are in chroma units even though
// the optimizer internally works on the tanh-normalized scale.

namespace microcolor {

/// Mean squared chroma error per pixel: (1/(h*w)) * sum((da)^2 + (db)^2).
inline double mse_loss(const ChromaMap& pred, const ChromaMap& target) {
  if (pred.a.width != target.a.width || pred.a.height != target.a.height)
    throw shape_error("mse_loss: prediction " + std::to_string(pred.a.width) + "x" +
                      std::to_string(pred.a.height) + " vs target " +
                      std::to_string(target.a.width) + "x" + std::to_string(target.a.height));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.a.v.size(); ++i) {
    const double da = pred.a.v[i] - target.a.v[i];
    const double db = pred.b.v[i] - target.b.v[i];
    acc += da * da + db * db;
  }
  return acc / (static_cast<double>(pred.a.width) * pred.a.height);
}

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 16;
  int max_epochs = 300;
  int patience = 10;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir;  // empty: keep everything in memory
  int checkpoint_every = 0;              // epochs between periodic saves; 0 saves best only

  void validate() const {
    if (!(learning_rate > 0.0)) throw argument_error("TrainConfig: learning rate must be positive");
    if (batch_size < 1) throw argument_error("TrainConfig: batch size must be >= 1");
    if (max_epochs < 1) throw argument_error("TrainConfig: max epochs must be >= 1");
    if (patience < 1 || patience >= max_epochs)
      throw argument_error("TrainConfig: patience must be in [1, max_epochs)");
    if (min_delta < 0.0) throw argument_error("TrainConfig: min delta must be >= 0");
    if (checkpoint_every < 0) throw argument_error("TrainConfig: checkpoint interval must be >= 0");
  }
};

struct TrainReport {
  std::vector<double> train_losses;  // one entry per completed epoch
  std::vector<double> val_losses;
  int epochs_run = 0;
  int best_epoch = 0;  // 1-indexed
  double best_val = std::numeric_limits<double>::infinity();
  std::filesystem::path best_checkpoint_path;

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw io_error("cannot write loss log '" + path.string() + "'");
    os << "epoch,train_loss,val_loss\n";
    for (std::size_t i = 0; i < train_losses.size(); ++i) {
      char line[96];
      std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", i + 1, train_losses[i], val_losses[i]);
      os << line;
    }
    if (!os.flush()) throw io_error("failed writing loss log '" + path.string() + "'");
  }
};

/// Stops when the watched value has not improved by at least min_delta for
/// `patience` consecutive observations.
class EarlyStopper {
 public:
  EarlyStopper(int patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

  /// Returns true when this observation is a new best.
  bool observe(double value) {
    if (value < best_ - min_delta_) {
      best_ = value;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

/// Adam with bias correction; state is kept per parameter array.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<ParamRef>& params, const std::vector<Array>& grads) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Array& p = *params[i].value;
      const Array& g = grads[i];
      if (!m_[i].same_shape(p)) {
        m_[i] = Array(p.shape);
        v_[i] = Array(p.shape);
      }
      for (std::size_t j = 0; j < p.v.size(); ++j) {
        m_[i].v[j] = beta1_ * m_[i].v[j] + (1.0 - beta1_) * g.v[j];
        v_[i].v[j] = beta2_ * v_[i].v[j] + (1.0 - beta2_) * g.v[j] * g.v[j];
        p.v[j] -= lr_ * (m_[i].v[j] / c1) / (std::sqrt(v_[i].v[j] / c2) + eps_);
      }
    }
  }

  long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Array> m_, v_;
};

namespace detail {

/// Everything the loop needs per sample, computed once up front: the padded
/// luminance tensor, the normalized chroma target aligned with it (padding
/// area excluded from the loss), and the frozen embedding of the original
/// image.
struct PreparedSample {
  Tensor x;                 // padded, L/100
  Tensor target;            // padded, chroma/ab_scale; NaN marks padding
  std::size_t real_pixels;  // pixel count of the unpadded image
  std::vector<double> emb;
};

inline PreparedSample prepare_sample(const EeCnnModel& model, const Sample& s,
                                     const EmbeddingProvider& provider) {
  PreparedSample out;
  int pt, pb, pl, pr;
  const Plane padded = model.pad_to_divisor(s.l, pt, pb, pl, pr);
  out.x = Tensor(padded.height, padded.width, 1);
  for (int y = 0; y < padded.height; ++y)
    for (int x = 0; x < padded.width; ++x) out.x.at(y, x, 0) = padded.at(x, y) / 100.0;
  const double scale = model.config().ab_scale;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.target = Tensor(padded.height, padded.width, 2);
  std::fill(out.target.v.begin(), out.target.v.end(), nan);
  for (int y = 0; y < s.l.height; ++y)
    for (int x = 0; x < s.l.width; ++x) {
      out.target.at(y + pt, x + pl, 0) = s.ab.a.at(x, y) / scale;
      out.target.at(y + pt, x + pl, 1) = s.ab.b.at(x, y) / scale;
    }
  out.real_pixels = static_cast<std::size_t>(s.l.width) * s.l.height;
  if (model.config().use_embedding) out.emb = provider.embed(luminance_to_rgb(s.l));
  return out;
}

/// Loss in chroma units plus the gradient of the *batch-mean normalized*
/// loss w.r.t. the tanh output. Padding cells contribute nothing.
inline double loss_and_grad(const EeCnnModel& model, const PreparedSample& ps, const Tensor& pred,
                            int batch_size, Tensor& d_out) {
  d_out = Tensor(pred.h, pred.w, pred.c);
  double acc = 0.0;
  const double inv = 1.0 / static_cast<double>(ps.real_pixels);
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    const double t = ps.target.v[i];
    if (std::isnan(t)) continue;
    const double r = pred.v[i] - t;
    acc += r * r;
    d_out.v[i] = 2.0 * r * inv / batch_size;
  }
  const double scale = model.config().ab_scale;
  return acc * inv * scale * scale;
}

}  // namespace detail

/// Fits the model in place. Epoch order is reshuffled from the seed, partial
/// trailing batches are kept, and the weights that scored best on the
/// validation split are restored before returning. With an empty validation
/// set the epoch's own training loss is watched instead.
inline TrainReport train_eecnn(EeCnnModel& model, const std::vector<Sample>& train_set,
                               const std::vector<Sample>& val_set,
                               const EmbeddingProvider& provider, const TrainConfig& tc) {
  tc.validate();
  if (train_set.empty()) throw argument_error("train_eecnn: empty training set");

  std::vector<detail::PreparedSample> train_ps, val_ps;
  train_ps.reserve(train_set.size());
  for (const Sample& s : train_set) train_ps.push_back(detail::prepare_sample(model, s, provider));
  val_ps.reserve(val_set.size());
  for (const Sample& s : val_set) val_ps.push_back(detail::prepare_sample(model, s, provider));

  if (!tc.checkpoint_dir.empty()) std::filesystem::create_directories(tc.checkpoint_dir);

  AdamOptimizer opt(tc.learning_rate);
  EarlyStopper stopper(tc.patience, tc.min_delta);
  TrainReport report;
  ModelWeights best_weights = model.export_weights();
  auto params = model.parameters();
  std::vector<Array> grads;
  std::vector<std::size_t> order(train_ps.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(tc.seed, static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);

    double epoch_loss = 0.0;
    for (std::size_t base = 0; base < order.size(); base += tc.batch_size) {
      const int b = static_cast<int>(std::min<std::size_t>(tc.batch_size, order.size() - base));
      for (Array& g : grads) std::fill(g.v.begin(), g.v.end(), 0.0);
      for (int k = 0; k < b; ++k) {
        const detail::PreparedSample& ps = train_ps[order[base + k]];
        EeCnnModel::Trace tr = model.forward_trace(ps.x, ps.emb);
        Tensor d_out;
        const double loss = detail::loss_and_grad(model, ps, tr.out_tanh, b, d_out);
        if (!std::isfinite(loss))
          throw divergence_error("training loss is not finite", opt.steps_taken() + 1);
        epoch_loss += loss;
        model.backward(tr, d_out, grads);
      }
      opt.step(params, grads);
    }
    epoch_loss /= static_cast<double>(train_ps.size());

    double val_loss = epoch_loss;
    if (!val_ps.empty()) {
      val_loss = 0.0;
      for (const auto& ps : val_ps) {
        EeCnnModel::Trace tr = model.forward_trace(ps.x, ps.emb);
        Tensor unused;
        val_loss += detail::loss_and_grad(model, ps, tr.out_tanh, 1, unused);
      }
      val_loss /= static_cast<double>(val_ps.size());
      if (!std::isfinite(val_loss))
        throw divergence_error("validation loss is not finite", opt.steps_taken());
    }

    report.train_losses.push_back(epoch_loss);
    report.val_losses.push_back(val_loss);
    report.epochs_run = epoch;

    if (stopper.observe(val_loss)) {
      report.best_epoch = epoch;
      report.best_val = val_loss;
      best_weights = model.export_weights();
      if (!tc.checkpoint_dir.empty()) {
        report.best_checkpoint_path = tc.checkpoint_dir / "best.ckpt";
        save_checkpoint(best_weights, report.best_checkpoint_path);
      }
    }
    if (!tc.checkpoint_dir.empty() && tc.checkpoint_every > 0 && epoch % tc.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04d.ckpt", epoch);
      save_checkpoint(model.export_weights(), tc.checkpoint_dir / name);
    }
    if (stopper.should_stop()) break;
  }

  model = EeCnnModel(model.config(), best_weights);
  return report;
}

/// Convenience overload that pulls both splits out of a manifest.
inline TrainReport train_eecnn(EeCnnModel& model, const DatasetManifest& manifest,
                               const EmbeddingProvider& provider, const TrainConfig& tc) {
  return train_eecnn(model, load_samples(manifest, SampleRole::train),
                     load_samples(manifest, SampleRole::test), provider, tc);
}

}  // namespace microcolor
