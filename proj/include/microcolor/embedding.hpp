#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "microcolor/image.hpp"
#include "microcolor/rng.hpp"

namespace microcolor {

/// Source of a global semantic feature vector for an image. Production use
/// plugs in a pretrained classifier's pooled output; implementations must be
/// deterministic (same image, same vector) and return finite values.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(const RgbImage& img) const = 0;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
};

/// Hermetic stand-in provider: a fixed seeded random projection of the
/// per-channel means. Needs no downloaded weights, so tests and the CLI can
/// run anywhere; distinct images map to distinct vectors unless their pooled
/// statistics coincide.
class ConstantEmbedder final : public EmbeddingProvider {
 public:
  ConstantEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 1) throw argument_error("ConstantEmbedder: dim must be >= 1");
    std::mt19937_64 rng(seed);
    proj_.resize(static_cast<std::size_t>(dim) * 3);
    for (double& x : proj_) x = uniform_range(rng, -1.0, 1.0);
  }

  std::vector<double> embed(const RgbImage& img) const override {
    double mean[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < img.px.size(); i += 3) {
      mean[0] += img.px[i];
      mean[1] += img.px[i + 1];
      mean[2] += img.px[i + 2];
    }
    const double n = static_cast<double>(img.px.size() / 3) * 255.0;
    for (double& m : mean) m /= n;
    std::vector<double> out(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) {
      const double* row = &proj_[static_cast<std::size_t>(i) * 3];
      out[i] = row[0] * mean[0] + row[1] * mean[1] + row[2] * mean[2];
    }
    return out;
  }

  std::string name() const override { return "constant-embedder(seed=" + std::to_string(seed_) + ")"; }
  int dim() const override { return dim_; }

 private:
  int dim_;
  std::uint64_t seed_;
  std::vector<double> proj_;
};

}  // namespace microcolor
