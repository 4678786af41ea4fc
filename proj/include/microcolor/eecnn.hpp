#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "microcolor/embedding.hpp"
#include "microcolor/image.hpp"
#include "microcolor/nn.hpp"
#include "microcolor/rng.hpp"
#include "microcolor/weights.hpp"

// The colorization network: a strided convolutional encoder over the L
// plane, a fusion layer that spreads a global embedding vector uniformly
// across the encoder grid, and a decoder that reconstructs the chroma pair
// at input resolution with nearest-neighbor upsampling.

namespace microcolor {

/// Architecture hyperparameters. The default geometry is 8 encoder layers of
/// 4x4 kernels with stride 2 at layers 1, 3, 5, so the encoder output is
/// (H/8, W/8, 512) and the decoder climbs back up through 3 upsampling
/// stages. Shrunk variants (fewer layers/channels) are valid as long as the
/// stride-2 count matches the decoder stage count.
struct EeCnnConfig {
  std::vector<int> encoder_channels = {64, 128, 128, 256, 256, 512, 512, 512};
  std::vector<int> stride2_layers = {1, 3, 5};  // 1-indexed encoder layers with stride 2
  int kernel_size = 4;
  int embedding_dim = 1000;
  int fusion_channels = 256;
  int decoder_stages = 3;
  double ab_scale = 128.0;
  bool use_embedding = true;

  /// Input dimensions must be divisible by this for the encoder/decoder
  /// round trip to reproduce the input size.
  int spatial_divisor() const { return 1 << stride2_layers.size(); }

  void validate() const {
    if (encoder_channels.empty()) throw argument_error("EeCnnConfig: no encoder layers");
    for (int c : encoder_channels)
      if (c < 1) throw argument_error("EeCnnConfig: encoder channels must be >= 1");
    if (kernel_size != 4) throw argument_error("EeCnnConfig: kernel size is fixed at 4");
    int prev = 0;
    for (int s : stride2_layers) {
      if (s <= prev || s > static_cast<int>(encoder_channels.size()))
        throw argument_error("EeCnnConfig: stride-2 layer indices must be ascending and in range");
      prev = s;
    }
    if (decoder_stages != static_cast<int>(stride2_layers.size()))
      throw argument_error("EeCnnConfig: decoder stages must equal the stride-2 layer count");
    if (fusion_channels < 1) throw argument_error("EeCnnConfig: fusion channels must be >= 1");
    if (use_embedding && embedding_dim < 1)
      throw argument_error("EeCnnConfig: embedding dim must be >= 1");
    if (!(ab_scale > 0.0)) throw argument_error("EeCnnConfig: ab scale must be positive");
  }

  /// Canonical one-line description; stored in checkpoints and hashed into
  /// the fingerprint.
  std::string describe() const {
    std::ostringstream os;
    os << "eecnn/1;enc=";
    for (std::size_t i = 0; i < encoder_channels.size(); ++i)
      os << (i ? "," : "") << encoder_channels[i];
    os << ";s2=";
    for (std::size_t i = 0; i < stride2_layers.size(); ++i)
      os << (i ? "," : "") << stride2_layers[i];
    os << ";k=" << kernel_size << ";emb=" << embedding_dim << ";fuse=" << fusion_channels
       << ";dec=" << decoder_stages << ";ab=" << ab_scale << ";use_emb=" << (use_embedding ? 1 : 0);
    return os.str();
  }

  std::uint64_t fingerprint() const { return fnv1a64(describe()); }

  static EeCnnConfig parse(const std::string& text) {
    EeCnnConfig cfg;
    cfg.encoder_channels.clear();
    cfg.stride2_layers.clear();
    std::istringstream is(text);
    std::string field;
    if (!std::getline(is, field, ';') || field != "eecnn/1")
      throw argument_error("EeCnnConfig::parse: unknown description '" + text + "'");
    auto parse_ints = [](const std::string& s) {
      std::vector<int> out;
      std::istringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
      return out;
    };
    while (std::getline(is, field, ';')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos)
        throw argument_error("EeCnnConfig::parse: bad field '" + field + "'");
      const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
      if (key == "enc")
        cfg.encoder_channels = parse_ints(val);
      else if (key == "s2")
        cfg.stride2_layers = parse_ints(val);
      else if (key == "k")
        cfg.kernel_size = std::stoi(val);
      else if (key == "emb")
        cfg.embedding_dim = std::stoi(val);
      else if (key == "fuse")
        cfg.fusion_channels = std::stoi(val);
      else if (key == "dec")
        cfg.decoder_stages = std::stoi(val);
      else if (key == "ab")
        cfg.ab_scale = std::stod(val);
      else if (key == "use_emb")
        cfg.use_embedding = std::stoi(val) != 0;
      else
        throw argument_error("EeCnnConfig::parse: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
  }
};

namespace detail {

/// Mirror index for reflect padding (edge pixel not repeated).
inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

inline Plane pad_reflect(const Plane& p, int top, int bottom, int left, int right) {
  Plane out(p.width + left + right, p.height + top + bottom);
  for (int y = 0; y < out.height; ++y) {
    const int sy = reflect_index(y - top, p.height);
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = p.at(reflect_index(x - left, p.width), sy);
  }
  return out;
}

}  // namespace detail

/// The L plane replicated to three 8-bit channels; this is what gets handed
/// to an embedding provider, which normally expects a photo-like input.
inline RgbImage luminance_to_rgb(const Plane& l) {
  RgbImage img(l.width, l.height);
  for (int y = 0; y < l.height; ++y)
    for (int x = 0; x < l.width; ++x) {
      const auto g =
          static_cast<std::uint8_t>(std::clamp<long>(std::lround(l.at(x, y) * 2.55), 0, 255));
      std::uint8_t* p = img.pixel(x, y);
      p[0] = p[1] = p[2] = g;
    }
  return img;
}

/// Named view of one parameter array inside a model.
struct ParamRef {
  std::string name;
  Array* value = nullptr;
};

/// Embedding provider conventionally paired with a model: seeded off the
/// model's init seed, so anyone holding a checkpoint can rebuild the exact
/// provider the training run used.
inline ConstantEmbedder standard_embedder(const EeCnnConfig& cfg, std::uint64_t init_seed) {
  return ConstantEmbedder(std::max(1, cfg.embedding_dim), derive_seed(init_seed, 0x656d626564ULL));
}

class EeCnnModel {
 public:
  /// Fresh model with fan-in uniform initialization. The output layer gets a
  /// small gain so the untrained network predicts near-neutral chroma.
  EeCnnModel(const EeCnnConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    build_layers();
    init_seed_ = init_seed;
    std::mt19937_64 rng(init_seed);
    for (auto& c : enc_) c.init(rng);
    fusion_.init(rng);
    for (auto& c : dec_) c.init(rng);
    out_.init(rng, 0.05);
  }

  /// Rebind saved weights; the checkpoint must have been produced under an
  /// identical configuration.
  EeCnnModel(const EeCnnConfig& cfg, const ModelWeights& weights) : cfg_(cfg) {
    cfg_.validate();
    build_layers();
    if (weights.config_fingerprint != cfg_.fingerprint())
      throw fingerprint_error("EeCnnModel: weights fingerprint " +
                              std::to_string(weights.config_fingerprint) +
                              " does not match config fingerprint " +
                              std::to_string(cfg_.fingerprint()));
    init_seed_ = weights.init_seed;
    for (ParamRef ref : parameters()) {
      const Array* stored = weights.find(ref.name);
      if (!stored) throw checkpoint_error("EeCnnModel: missing parameter block '" + ref.name + "'");
      if (!stored->same_shape(*ref.value))
        throw checkpoint_error("EeCnnModel: shape mismatch for block '" + ref.name + "'");
      *ref.value = *stored;
    }
  }

  const EeCnnConfig& config() const { return cfg_; }
  std::uint64_t init_seed() const { return init_seed_; }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < enc_.size(); ++i) {
      refs.push_back({"enc" + std::to_string(i + 1) + ".w", &enc_[i].w});
      refs.push_back({"enc" + std::to_string(i + 1) + ".b", &enc_[i].b});
    }
    refs.push_back({"fusion.w", &fusion_.w});
    refs.push_back({"fusion.b", &fusion_.b});
    for (std::size_t i = 0; i < dec_.size(); ++i) {
      refs.push_back({"dec" + std::to_string(i + 1) + ".w", &dec_[i].w});
      refs.push_back({"dec" + std::to_string(i + 1) + ".b", &dec_[i].b});
    }
    refs.push_back({"out.w", &out_.w});
    refs.push_back({"out.b", &out_.b});
    return refs;
  }

  ModelWeights export_weights() {
    ModelWeights w;
    w.config_fingerprint = cfg_.fingerprint();
    w.config_description = cfg_.describe();
    w.init_seed = init_seed_;
    for (ParamRef ref : parameters()) w.blocks.push_back({ref.name, *ref.value});
    return w;
  }

  /// Encoder over a luminance plane whose dimensions are divisible by the
  /// spatial divisor. L is normalized to [0,1] internally.
  Tensor encode(const Plane& l) const {
    const int d = cfg_.spatial_divisor();
    if (l.width % d != 0 || l.height % d != 0)
      throw shape_error("encode: " + std::to_string(l.width) + "x" + std::to_string(l.height) +
                        " not divisible by " + std::to_string(d));
    Tensor x(l.height, l.width, 1);
    for (int y = 0; y < l.height; ++y)
      for (int xx = 0; xx < l.width; ++xx) x.at(y, xx, 0) = l.at(xx, y) / 100.0;
    return encode_tensor(x);
  }

  Tensor encode_tensor(const Tensor& x) const {
    Tensor t = x;
    for (const auto& conv : enc_) t = nn::relu(conv.forward(t));
    return t;
  }

  /// The embedding vector replicated at every spatial cell and concatenated
  /// depthwise under the encoder features. Exposed separately so the
  /// uniform-replication property is directly observable.
  Tensor fusion_input(const Tensor& enc, const std::vector<double>& emb) const {
    if (!cfg_.use_embedding) return enc;
    if (static_cast<int>(emb.size()) != cfg_.embedding_dim)
      throw shape_error("fusion_input: embedding length " + std::to_string(emb.size()) +
                        ", expected " + std::to_string(cfg_.embedding_dim));
    Tensor t(enc.h, enc.w, enc.c + cfg_.embedding_dim);
    for (int y = 0; y < enc.h; ++y)
      for (int x = 0; x < enc.w; ++x) {
        double* dst = &t.v[t.idx(y, x, 0)];
        const double* src = &enc.v[enc.idx(y, x, 0)];
        std::copy(src, src + enc.c, dst);
        std::copy(emb.begin(), emb.end(), dst + enc.c);
      }
    return t;
  }

  Tensor fuse(const Tensor& enc, const std::vector<double>& emb) const {
    return nn::relu(fusion_.forward(fusion_input(enc, emb)));
  }

  /// Decoder: (conv, x2 nearest-neighbor upsample) per stage, then a final
  /// conv squashed through tanh and rescaled to chroma units.
  ChromaMap decode(const Tensor& fused) const {
    Tensor t = fused;
    for (const auto& conv : dec_) t = nn::upsample2(nn::relu(conv.forward(t)));
    t = nn::tanh_forward(out_.forward(t));
    return chroma_from_tanh(t);
  }

  /// End-to-end inference on a luminance plane of any geometry with sides at
  /// least the spatial divisor: reflect-pads up to the divisor, runs
  /// encode/fuse/decode, and crops the chroma back to the input size.
  ChromaMap forward(const Plane& l, const EmbeddingProvider& provider) const {
    std::vector<double> emb;
    if (cfg_.use_embedding) emb = provider.embed(luminance_to_rgb(l));
    return forward_with_embedding(l, emb);
  }

  ChromaMap forward_with_embedding(const Plane& l, const std::vector<double>& emb) const {
    int pt, pb, pl, pr;
    const Plane padded = pad_to_divisor(l, pt, pb, pl, pr);
    ChromaMap full = decode(fuse(encode(padded), emb));
    if (pt == 0 && pb == 0 && pl == 0 && pr == 0) return full;
    ChromaMap out = ChromaMap::zeros(l.width, l.height);
    for (int y = 0; y < l.height; ++y)
      for (int x = 0; x < l.width; ++x) {
        out.a.at(x, y) = full.a.at(x + pl, y + pt);
        out.b.at(x, y) = full.b.at(x + pl, y + pt);
      }
    return out;
  }

  Plane pad_to_divisor(const Plane& l, int& pt, int& pb, int& pl, int& pr) const {
    const int d = cfg_.spatial_divisor();
    if (l.width < d || l.height < d)
      throw shape_error("forward: input " + std::to_string(l.width) + "x" +
                        std::to_string(l.height) + " smaller than divisor " + std::to_string(d));
    const int pad_w = (d - l.width % d) % d;
    const int pad_h = (d - l.height % d) % d;
    pt = pad_h / 2;
    pb = pad_h - pt;
    pl = pad_w / 2;
    pr = pad_w - pl;
    if (pad_w == 0 && pad_h == 0) return l;
    return detail::pad_reflect(l, pt, pb, pl, pr);
  }

  // ---- training interface ----------------------------------------------

  /// Activations retained for one backward pass. `out_tanh` is the network
  /// output in normalized units, i.e. chroma / ab_scale.
  struct Trace {
    Tensor input;                 // H x W x 1, normalized L
    std::vector<Tensor> enc_out;  // post-relu, per encoder layer
    Tensor fuse_in;
    Tensor fuse_out;
    std::vector<Tensor> dec_conv_out;  // post-relu, pre-upsample
    std::vector<Tensor> dec_up_out;
    Tensor out_tanh;  // H x W x 2 in (-1, 1)
  };

  Trace forward_trace(const Tensor& x, const std::vector<double>& emb) const {
    Trace tr;
    tr.input = x;
    Tensor t = x;
    for (const auto& conv : enc_) {
      t = nn::relu(conv.forward(t));
      tr.enc_out.push_back(t);
    }
    tr.fuse_in = fusion_input(t, emb);
    tr.fuse_out = nn::relu(fusion_.forward(tr.fuse_in));
    t = tr.fuse_out;
    for (const auto& conv : dec_) {
      Tensor c = nn::relu(conv.forward(t));
      tr.dec_conv_out.push_back(c);
      t = nn::upsample2(c);
      tr.dec_up_out.push_back(t);
    }
    tr.out_tanh = nn::tanh_forward(out_.forward(t));
    return tr;
  }

  /// Backpropagate d(loss)/d(out_tanh), accumulating parameter gradients
  /// into `grads` (aligned with parameters() order).
  void backward(const Trace& tr, const Tensor& d_out, std::vector<Array>& grads) const {
    const std::size_t n_enc = enc_.size(), n_dec = dec_.size();
    grads.resize(2 * (n_enc + n_dec + 2));
    auto gw = [&](std::size_t layer) -> Array& { return grads[2 * layer]; };
    auto gb = [&](std::size_t layer) -> Array& { return grads[2 * layer + 1]; };
    const std::size_t fusion_i = n_enc, dec0_i = n_enc + 1, out_i = n_enc + 1 + n_dec;

    Tensor d = nn::tanh_backward(tr.out_tanh, d_out);
    const Tensor& out_in = n_dec > 0 ? tr.dec_up_out.back() : tr.fuse_out;
    d = out_.backward(out_in, d, gw(out_i), gb(out_i));
    for (std::size_t j = n_dec; j-- > 0;) {
      d = nn::upsample2_backward(d);
      d = nn::relu_backward(tr.dec_conv_out[j], d);
      const Tensor& conv_in = j > 0 ? tr.dec_up_out[j - 1] : tr.fuse_out;
      d = dec_[j].backward(conv_in, d, gw(dec0_i + j), gb(dec0_i + j));
    }
    d = nn::relu_backward(tr.fuse_out, d);
    d = fusion_.backward(tr.fuse_in, d, gw(fusion_i), gb(fusion_i));
    if (cfg_.use_embedding && !tr.enc_out.empty()) {
      // drop the replicated-embedding slice; the provider is frozen
      const Tensor& enc_last = tr.enc_out.back();
      Tensor trimmed(d.h, d.w, enc_last.c);
      for (int y = 0; y < d.h; ++y)
        for (int x = 0; x < d.w; ++x) {
          const double* src = &d.v[d.idx(y, x, 0)];
          std::copy(src, src + enc_last.c, &trimmed.v[trimmed.idx(y, x, 0)]);
        }
      d = std::move(trimmed);
    }
    for (std::size_t j = n_enc; j-- > 0;) {
      d = nn::relu_backward(tr.enc_out[j], d);
      const Tensor& conv_in = j > 0 ? tr.enc_out[j - 1] : tr.input;
      d = enc_[j].backward(conv_in, d, gw(j), gb(j));
    }
  }

  ChromaMap chroma_from_tanh(const Tensor& t) const {
    ChromaMap out = ChromaMap::zeros(t.w, t.h);
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) {
        out.a.at(x, y) = std::clamp(t.at(y, x, 0) * cfg_.ab_scale, -128.0, 127.0);
        out.b.at(x, y) = std::clamp(t.at(y, x, 1) * cfg_.ab_scale, -128.0, 127.0);
      }
    return out;
  }

 private:
  void build_layers() {
    enc_.clear();
    dec_.clear();
    int in_c = 1;
    for (std::size_t i = 0; i < cfg_.encoder_channels.size(); ++i) {
      const bool strided = std::find(cfg_.stride2_layers.begin(), cfg_.stride2_layers.end(),
                                     static_cast<int>(i + 1)) != cfg_.stride2_layers.end();
      enc_.emplace_back(cfg_.kernel_size, in_c, cfg_.encoder_channels[i], strided ? 2 : 1);
      in_c = cfg_.encoder_channels[i];
    }
    const int fuse_in = in_c + (cfg_.use_embedding ? cfg_.embedding_dim : 0);
    fusion_ = nn::Conv2d(cfg_.kernel_size, fuse_in, cfg_.fusion_channels, 1);
    int c = cfg_.fusion_channels;
    for (int j = 0; j < cfg_.decoder_stages; ++j) {
      const int next = std::max(c / 2, 2);
      dec_.emplace_back(cfg_.kernel_size, c, next, 1);
      c = next;
    }
    out_ = nn::Conv2d(cfg_.kernel_size, c, 2, 1);
  }

  EeCnnConfig cfg_;
  std::vector<nn::Conv2d> enc_;
  nn::Conv2d fusion_;
  std::vector<nn::Conv2d> dec_;
  nn::Conv2d out_;
  std::uint64_t init_seed_ = 0;
};

}  // namespace microcolor
