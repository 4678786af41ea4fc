#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "microcolor/tensor.hpp"
#include "microcolor/version.hpp"

// Trained parameters and their on-disk checkpoint format. A checkpoint is a
// single little-endian binary file: header (magic, format version, config
// fingerprint, config description, init seed), then named shape-tagged
// blocks, then a trailing sentinel. The config description string makes the
// file self-describing: a loader can rebuild the architecture without any
// out-of-band information.

namespace microcolor {

struct ParamBlock {
  std::string name;
  Array value;
};

struct ModelWeights {
  std::uint64_t config_fingerprint = 0;
  std::string config_description;
  std::uint64_t init_seed = 0;
  std::vector<ParamBlock> blocks;

  Array* find(const std::string& name) {
    for (auto& b : blocks)
      if (b.name == name) return &b.value;
    return nullptr;
  }
  const Array* find(const std::string& name) const {
    return const_cast<ModelWeights*>(this)->find(name);
  }
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'M', 'C', 'O', 'L', 'C', 'K', 'P', 'T'};
inline constexpr char kCheckpointEnd[8] = {'M', 'C', 'O', 'L', 'E', 'N', 'D', '\n'};

inline void put_u32(std::ostream& out, std::uint32_t x) {
  char b[4] = {static_cast<char>(x), static_cast<char>(x >> 8), static_cast<char>(x >> 16),
               static_cast<char>(x >> 24)};
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t x) {
  put_u32(out, static_cast<std::uint32_t>(x));
  put_u32(out, static_cast<std::uint32_t>(x >> 32));
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

inline std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | hi << 32;
}

inline void put_f64(std::ostream& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(out, bits);
}

inline double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

inline void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_str(std::istream& in, std::size_t max_len) {
  const std::uint32_t n = get_u32(in);
  if (!in || n > max_len) throw checkpoint_error("checkpoint: bad string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

}  // namespace detail

/// Atomic write: the file is staged alongside the target and renamed into
/// place, so a crashed save never leaves a half-written checkpoint.
inline void save_checkpoint(const ModelWeights& w, const std::filesystem::path& path) {
  namespace d = detail;
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("save_checkpoint: cannot open '" + tmp.string() + "'");
    out.write(d::kCheckpointMagic, 8);
    d::put_u32(out, kCheckpointFormatVersion);
    d::put_u64(out, w.config_fingerprint);
    d::put_str(out, w.config_description);
    d::put_u64(out, w.init_seed);
    d::put_u32(out, static_cast<std::uint32_t>(w.blocks.size()));
    for (const auto& b : w.blocks) {
      d::put_str(out, b.name);
      d::put_u32(out, static_cast<std::uint32_t>(b.value.shape.size()));
      for (int dim : b.value.shape) d::put_u32(out, static_cast<std::uint32_t>(dim));
      for (double x : b.value.v) d::put_f64(out, x);
    }
    out.write(d::kCheckpointEnd, 8);
    if (!out.flush()) throw io_error("save_checkpoint: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Load and structurally validate a checkpoint. Truncated or malformed files
/// raise checkpoint_error; nothing is returned partially.
inline ModelWeights load_checkpoint(const std::filesystem::path& path) {
  namespace d = detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw checkpoint_error("load_checkpoint: cannot open '" + path.string() + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, d::kCheckpointMagic, 8) != 0)
    throw checkpoint_error("load_checkpoint: '" + path.string() + "' is not a checkpoint");
  const std::uint32_t version = d::get_u32(in);
  if (version != kCheckpointFormatVersion)
    throw checkpoint_error("load_checkpoint: unsupported format version " +
                           std::to_string(version));
  ModelWeights w;
  w.config_fingerprint = d::get_u64(in);
  w.config_description = d::get_str(in, 1 << 16);
  w.init_seed = d::get_u64(in);
  const std::uint32_t count = d::get_u32(in);
  if (!in || count > (1u << 20))
    throw checkpoint_error("load_checkpoint: corrupt block count");
  for (std::uint32_t i = 0; i < count; ++i) {
    ParamBlock b;
    b.name = d::get_str(in, 1 << 10);
    const std::uint32_t ndims = d::get_u32(in);
    if (!in || ndims > 8) throw checkpoint_error("load_checkpoint: corrupt block header");
    std::vector<int> shape;
    std::size_t n = 1;
    for (std::uint32_t j = 0; j < ndims; ++j) {
      const std::uint32_t dim = d::get_u32(in);
      if (!in || dim == 0 || dim > (1u << 24))
        throw checkpoint_error("load_checkpoint: corrupt shape");
      shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    if (n > (1ull << 30)) throw checkpoint_error("load_checkpoint: block too large");
    b.value = Array(shape);
    for (std::size_t j = 0; j < n; ++j) b.value.v[j] = d::get_f64(in);
    if (!in) throw checkpoint_error("load_checkpoint: truncated block '" + b.name + "'");
    w.blocks.push_back(std::move(b));
  }
  char end[8];
  in.read(end, 8);
  if (!in || std::memcmp(end, d::kCheckpointEnd, 8) != 0)
    throw checkpoint_error("load_checkpoint: missing end marker (truncated file?)");
  return w;
}

}  // namespace microcolor
