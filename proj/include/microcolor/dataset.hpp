#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "microcolor/colorspace.hpp"
#include "microcolor/io.hpp"
#include "microcolor/rng.hpp"

// Dataset ingestion: users supply a directory of colorful images; this module
// resizes them to a common resolution, splits deterministically into train
// and test, and streams (L, AB) pairs for the trainer.

namespace microcolor {

enum class SampleRole { train, test };

inline const char* to_string(SampleRole r) { return r == SampleRole::train ? "train" : "test"; }

struct ManifestEntry {
  std::filesystem::path path;
  SampleRole role = SampleRole::train;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int resize_width = 300;
  int resize_height = 300;
  double split_ratio = 0.9;
  std::uint64_t seed = 0;

  std::size_t count(SampleRole role) const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.role == role;
    return n;
  }
};

/// One training pair: the network input L and its chroma target.
struct Sample {
  Plane l;
  ChromaMap ab;
  std::string source_id;
};

/// Decode, then bilinearly resample to the target resolution. Grayscale
/// sources come back with r = g = b.
inline RgbImage load_and_resize(const std::filesystem::path& path, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1)
    throw argument_error("load_and_resize: target dimensions must be >= 1");
  const RgbImage img = load_image(path);
  if (img.width == target_w && img.height == target_h) return img;
  return resize_bilinear(img, target_w, target_h);
}

/// Deterministic shuffled split: train count = round(ratio * N), remainder is
/// the test set. Entries are stored in shuffled order, train block first.
inline DatasetManifest make_split(const std::vector<std::filesystem::path>& paths, double ratio,
                                  std::uint64_t seed) {
  if (paths.empty()) throw argument_error("make_split: path list is empty");
  if (!(ratio > 0.0 && ratio < 1.0)) throw argument_error("make_split: ratio must be in (0,1)");
  {
    std::set<std::string> seen;
    for (const auto& p : paths)
      if (!seen.insert(p.string()).second)
        throw argument_error("make_split: duplicate path '" + p.string() + "'");
  }
  std::vector<std::filesystem::path> order = paths;
  std::mt19937_64 rng(seed);
  shuffle(order, rng);
  const auto train_n = static_cast<std::size_t>(std::lround(ratio * order.size()));
  DatasetManifest m;
  m.split_ratio = ratio;
  m.seed = seed;
  m.entries.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    m.entries.push_back({order[i], i < train_n ? SampleRole::train : SampleRole::test});
  return m;
}

/// Manifest persists as one line per entry: path<TAB>role.
inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("write_manifest: cannot open '" + path.string() + "'");
  for (const auto& e : m.entries) out << e.path.string() << '\t' << to_string(e.role) << '\n';
  if (!out.flush()) throw io_error("write_manifest: write failed for '" + path.string() + "'");
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("read_manifest: cannot open '" + path.string() + "'");
  DatasetManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw io_error("read_manifest: '" + path.string() + "' line " + std::to_string(lineno) +
                     ": expected path<TAB>role");
    const std::string role = line.substr(tab + 1);
    ManifestEntry e;
    e.path = line.substr(0, tab);
    if (role == "train")
      e.role = SampleRole::train;
    else if (role == "test")
      e.role = SampleRole::test;
    else
      throw io_error("read_manifest: '" + path.string() + "' line " + std::to_string(lineno) +
                     ": unknown role '" + role + "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline Sample sample_from_image(const RgbImage& img, std::string source_id) {
  auto [l, ab] = split_l_ab(rgb_to_lab(img));
  return Sample{std::move(l), std::move(ab), std::move(source_id)};
}

/// Lazy one-reader stream over the manifest's entries of one role, in
/// manifest order. Per-file failures surface as io_error tagged with the
/// source path.
class SampleStream {
 public:
  SampleStream(const DatasetManifest& manifest, SampleRole role)
      : manifest_(manifest), role_(role) {}

  std::optional<Sample> next() {
    while (pos_ < manifest_.entries.size()) {
      const ManifestEntry& e = manifest_.entries[pos_++];
      if (e.role != role_) continue;
      try {
        return sample_from_image(
            load_and_resize(e.path, manifest_.resize_width, manifest_.resize_height),
            e.path.string());
      } catch (const error& err) {
        throw io_error("sample '" + e.path.string() + "': " + err.what());
      }
    }
    return std::nullopt;
  }

 private:
  const DatasetManifest& manifest_;
  SampleRole role_;
  std::size_t pos_ = 0;
};

inline std::vector<Sample> load_samples(const DatasetManifest& manifest, SampleRole role) {
  SampleStream stream(manifest, role);
  std::vector<Sample> out;
  while (auto s = stream.next()) out.push_back(std::move(*s));
  return out;
}

/// Image files under a directory (non-recursive), sorted by filename for
/// reproducible splits.
inline std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir) {
  static const std::set<std::string> kExts = {".png", ".jpg", ".jpeg", ".tif", ".tiff"};
  if (!std::filesystem::is_directory(dir))
    throw io_error("list_image_files: '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (kExts.count(ext)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace microcolor
