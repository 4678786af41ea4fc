#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "microcolor/dataset.hpp"
#include "microcolor/eecnn.hpp"
#include "microcolor/prepost.hpp"
#include "microcolor/trainer.hpp"

// Reference-guided coloring: overfit a small network to one reference image
// (its own luminance predicting its own chroma), then run the fitted map
// over the content luminance. Several references can split the content via
// masks, which must tile it exactly.

namespace microcolor {

/// Geometry small enough that a per-reference fit stays interactive.
inline EeCnnConfig nst_default_config() {
  EeCnnConfig cfg;
  cfg.encoder_channels = {8, 16, 32};
  cfg.stride2_layers = {1, 2};
  cfg.embedding_dim = 16;
  cfg.fusion_channels = 32;
  cfg.decoder_stages = 2;
  return cfg;
}

struct FitOptions {
  EeCnnConfig config = nst_default_config();
  int budget = 2000;                   // max optimizer updates
  double convergence_threshold = 1.0;  // stop once reference MSE drops this low
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    config.validate();
    if (budget < 1) throw argument_error("FitOptions: budget must be >= 1");
    if (convergence_threshold < 0.0)
      throw argument_error("FitOptions: convergence threshold must be >= 0");
    if (!(learning_rate > 0.0)) throw argument_error("FitOptions: learning rate must be positive");
  }
};

struct FitResult {
  ModelWeights weights;
  double final_loss = 0.0;  // reference MSE at the returned weights
  int steps_used = 0;
  bool converged = false;
};

/// One coloring source. The mask lives on the *content* geometry and marks
/// the pixels this reference is responsible for (any nonzero label); without
/// a mask the reference claims the whole image.
struct ReferenceSpec {
  RgbImage image;
  std::optional<RegionMask> mask;
};

struct TransferJob {
  Plane content_l;
  std::vector<ReferenceSpec> references;
  FitOptions fit;
  double post_bin_width = 1.0;
  Aggregator post_aggregator = Aggregator::mean;
};

struct TransferResult {
  ChromaMap ab;
  std::vector<FitResult> fits;  // aligned with the job's reference list
};

/// Cache key for fitted reference weights: pixels plus everything that
/// influences the fit.
inline std::uint64_t reference_fingerprint(const RgbImage& image, const FitOptions& opt) {
  std::string blob;
  blob.reserve(image.px.size() + 128);
  blob.assign(reinterpret_cast<const char*>(image.px.data()), image.px.size());
  blob += '|';
  blob += std::to_string(image.width) + "x" + std::to_string(image.height);
  blob += '|';
  blob += opt.config.describe();
  blob += '|';
  blob += std::to_string(opt.budget) + "," + std::to_string(opt.convergence_threshold) + "," +
          std::to_string(opt.learning_rate) + "," + std::to_string(opt.seed);
  return fnv1a64(blob);
}

/// Overfit a fresh network to a single reference until the budget runs out
/// or the loss crosses the threshold.
inline FitResult fit_reference(const RgbImage& reference, const FitOptions& opt,
                               const EmbeddingProvider& provider) {
  opt.validate();
  const Sample s = sample_from_image(reference, "reference");
  EeCnnModel model(opt.config, opt.seed);
  const detail::PreparedSample ps = detail::prepare_sample(model, s, provider);
  AdamOptimizer adam(opt.learning_rate);
  auto params = model.parameters();
  std::vector<Array> grads;

  FitResult res;
  while (true) {
    const EeCnnModel::Trace tr = model.forward_trace(ps.x, ps.emb);
    Tensor d_out;
    res.final_loss = detail::loss_and_grad(model, ps, tr.out_tanh, 1, d_out);
    if (!std::isfinite(res.final_loss))
      throw divergence_error("reference fit loss is not finite", res.steps_used);
    if (res.final_loss <= opt.convergence_threshold) {
      res.converged = true;
      break;
    }
    if (res.steps_used >= opt.budget) break;
    for (Array& g : grads) std::fill(g.v.begin(), g.v.end(), 0.0);
    model.backward(tr, d_out, grads);
    adam.step(params, grads);
    ++res.steps_used;
  }
  res.weights = model.export_weights();
  return res;
}

namespace detail {

/// Region ids on the content: pixel -> 1-based index of the covering
/// reference. Missing masks cover everything; coverage must be exactly once.
inline RegionMask coverage_regions(const Plane& content_l,
                                   const std::vector<ReferenceSpec>& references) {
  RegionMask regions(content_l.width, content_l.height);
  std::vector<int> count(regions.v.size(), 0);
  for (std::size_t r = 0; r < references.size(); ++r) {
    const auto& mask = references[r].mask;
    if (mask && (mask->width != content_l.width || mask->height != content_l.height))
      throw shape_error("transfer: mask " + std::to_string(mask->width) + "x" +
                        std::to_string(mask->height) + " does not match content " +
                        std::to_string(content_l.width) + "x" + std::to_string(content_l.height));
    for (std::size_t i = 0; i < regions.v.size(); ++i)
      if (!mask || mask->v[i] != 0) {
        ++count[i];
        regions.v[i] = static_cast<int>(r) + 1;
      }
  }
  std::size_t offending = 0;
  for (int c : count)
    if (c != 1) ++offending;
  if (offending > 0)
    throw mask_error("masks must cover the content exactly once", offending);
  return regions;
}

}  // namespace detail

/// Full pipeline: per-reference fit, per-reference full-image prediction,
/// mask compositing, then same-L-same-chroma enforcement inside each
/// reference's territory.
inline TransferResult transfer(const TransferJob& job, const EmbeddingProvider& provider) {
  job.fit.validate();
  if (job.references.empty()) throw argument_error("transfer: no references given");
  if (!(job.post_bin_width > 0.0))
    throw argument_error("transfer: post bin width must be positive");

  const RegionMask regions = detail::coverage_regions(job.content_l, job.references);

  TransferResult res;
  res.ab = ChromaMap::zeros(job.content_l.width, job.content_l.height);
  for (std::size_t r = 0; r < job.references.size(); ++r) {
    FitOptions opt = job.fit;
    opt.seed = derive_seed(job.fit.seed, static_cast<std::uint64_t>(r));
    FitResult fit = fit_reference(job.references[r].image, opt, provider);
    EeCnnModel fitted(opt.config, fit.weights);
    const ChromaMap pred = fitted.forward(job.content_l, provider);
    const int want = static_cast<int>(r) + 1;
    for (std::size_t i = 0; i < regions.v.size(); ++i)
      if (regions.v[i] == want) {
        res.ab.a.v[i] = pred.a.v[i];
        res.ab.b.v[i] = pred.b.v[i];
      }
    res.fits.push_back(std::move(fit));
  }

  res.ab = enforce_same_l_same_ab(job.content_l, res.ab, job.post_bin_width, regions,
                                  job.post_aggregator);
  return res;
}

/// Variant for callers that already hold fitted weights (e.g. a cache):
/// skips fitting and uses one weight set per reference.
inline TransferResult transfer_with_weights(const TransferJob& job,
                                            const std::vector<ModelWeights>& weights,
                                            const EmbeddingProvider& provider) {
  if (job.references.empty()) throw argument_error("transfer: no references given");
  if (weights.size() != job.references.size())
    throw argument_error("transfer: " + std::to_string(weights.size()) + " weight sets for " +
                         std::to_string(job.references.size()) + " references");
  if (!(job.post_bin_width > 0.0))
    throw argument_error("transfer: post bin width must be positive");

  const RegionMask regions = detail::coverage_regions(job.content_l, job.references);
  TransferResult res;
  res.ab = ChromaMap::zeros(job.content_l.width, job.content_l.height);
  for (std::size_t r = 0; r < weights.size(); ++r) {
    const EeCnnConfig cfg = EeCnnConfig::parse(weights[r].config_description);
    EeCnnModel fitted(cfg, weights[r]);
    const ChromaMap pred = fitted.forward(job.content_l, provider);
    const int want = static_cast<int>(r) + 1;
    for (std::size_t i = 0; i < regions.v.size(); ++i)
      if (regions.v[i] == want) {
        res.ab.a.v[i] = pred.a.v[i];
        res.ab.b.v[i] = pred.b.v[i];
      }
    FitResult fr;
    fr.weights = weights[r];
    res.fits.push_back(std::move(fr));
  }
  res.ab = enforce_same_l_same_ab(job.content_l, res.ab, job.post_bin_width, regions,
                                  job.post_aggregator);
  return res;
}

}  // namespace microcolor
