#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "microcolor/colorspace.hpp"
#include "microcolor/errors.hpp"
#include "microcolor/image.hpp"
#include "microcolor/rng.hpp"

// Measurement side of the pipeline: where does color land (saturation
// surfaces), what color is it (hue histograms), and can people tell it from
// the real thing (paired survey with a hidden key).

namespace microcolor {

/// Mean HSV saturation per block of the image, on a grid of
/// ceil(width/block) x ceil(height/block) cells; border cells just average
/// fewer pixels.
struct SaturationSurface {
  int block = 0;
  int grid_w = 0, grid_h = 0;
  std::vector<double> mean_s;

  double at(int gx, int gy) const { return mean_s[static_cast<std::size_t>(gy) * grid_w + gx]; }
};

inline SaturationSurface saturation_surface(const RgbImage& img, int block) {
  if (block < 1) throw argument_error("saturation_surface: block must be >= 1");
  const HsvImage hsv = rgb_to_hsv(img);
  SaturationSurface surf;
  surf.block = block;
  surf.grid_w = (img.width + block - 1) / block;
  surf.grid_h = (img.height + block - 1) / block;
  surf.mean_s.assign(static_cast<std::size_t>(surf.grid_w) * surf.grid_h, 0.0);
  for (int gy = 0; gy < surf.grid_h; ++gy)
    for (int gx = 0; gx < surf.grid_w; ++gx) {
      const int x0 = gx * block, y0 = gy * block;
      const int x1 = std::min(x0 + block, img.width), y1 = std::min(y0 + block, img.height);
      double sum = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) sum += hsv.s.at(x, y);
      surf.mean_s[static_cast<std::size_t>(gy) * surf.grid_w + gx] =
          sum / (static_cast<double>(x1 - x0) * (y1 - y0));
    }
  return surf;
}

/// Saturation grid as a Plane, for the comma-separated grid export.
inline Plane surface_plane(const SaturationSurface& surf) {
  Plane p(surf.grid_w, surf.grid_h);
  p.v = surf.mean_s;
  return p;
}

/// Saturation grid as a grayscale image (one pixel per cell, S=1 -> white).
inline RgbImage render_saturation(const SaturationSurface& surf) {
  RgbImage img(surf.grid_w, surf.grid_h);
  for (int y = 0; y < surf.grid_h; ++y)
    for (int x = 0; x < surf.grid_w; ++x) {
      const auto g =
          static_cast<std::uint8_t>(std::clamp<long>(std::lround(surf.at(x, y) * 255.0), 0, 255));
      std::uint8_t* p = img.pixel(x, y);
      p[0] = p[1] = p[2] = g;
    }
  return img;
}

/// Hue distribution over [0, 360). Pixels with zero saturation have no hue
/// and are tallied separately, so counts plus neutral always equals the
/// pixel count.
struct HueHistogram {
  std::vector<std::size_t> counts;
  std::size_t neutral = 0;

  int bins() const { return static_cast<int>(counts.size()); }
  double bin_width() const { return 360.0 / bins(); }
  std::size_t total() const {
    std::size_t t = neutral;
    for (std::size_t c : counts) t += c;
    return t;
  }
};

inline HueHistogram hue_histogram(const RgbImage& img, int bins) {
  if (bins < 1) throw argument_error("hue_histogram: bins must be >= 1");
  const HsvImage hsv = rgb_to_hsv(img);
  HueHistogram hist;
  hist.counts.assign(bins, 0);
  const double width = 360.0 / bins;
  for (std::size_t i = 0; i < hsv.h.v.size(); ++i) {
    if (hsv.s.v[i] == 0.0) {
      ++hist.neutral;
      continue;
    }
    const int bin = std::min(static_cast<int>(hsv.h.v[i] / width), bins - 1);
    ++hist.counts[bin];
  }
  return hist;
}

inline nlohmann::json to_json(const SaturationSurface& surf) {
  return {{"block", surf.block},
          {"grid_w", surf.grid_w},
          {"grid_h", surf.grid_h},
          {"mean_s", surf.mean_s}};
}

inline nlohmann::json to_json(const HueHistogram& hist) {
  return {{"bin_width", hist.bin_width()}, {"neutral", hist.neutral}, {"counts", hist.counts}};
}

// ---- realism survey -----------------------------------------------------

/// What a participant sees: image ids in presentation order, with no hint
/// of which are genuine.
struct Survey {
  std::vector<std::string> items;
};

/// The answer sheet, stored apart from the items on purpose.
struct SurveyKey {
  std::vector<std::string> items;      // same order as the published survey
  std::vector<std::string> predicted;  // the synthetic half
};

struct SurveyResponse {
  std::string participant_id;
  std::vector<std::string> shown;     // the 32 ids as presented to this participant
  std::vector<std::string> selected;  // ids the participant called synthetic
};

struct SurveyScore {
  double mean_score = 0.0;  // fraction of synthetic images correctly picked, averaged
  double chance_level = 0.5;
  std::vector<double> per_participant;
};

inline constexpr int kSurveyHalf = 16;

namespace detail {

inline bool has_duplicates(const std::vector<std::string>& ids) {
  std::set<std::string> seen(ids.begin(), ids.end());
  return seen.size() != ids.size();
}

}  // namespace detail

/// Interleave 16 genuine and 16 synthetic image ids into one shuffled
/// presentation list; the key that tells them apart is returned separately.
inline Survey build_survey(const std::vector<std::string>& real_ids,
                           const std::vector<std::string>& predicted_ids, std::uint64_t seed,
                           SurveyKey& key) {
  if (real_ids.size() != kSurveyHalf || predicted_ids.size() != kSurveyHalf)
    throw argument_error("survey: need exactly " + std::to_string(kSurveyHalf) +
                         " real and " + std::to_string(kSurveyHalf) + " predicted ids, got " +
                         std::to_string(real_ids.size()) + " and " +
                         std::to_string(predicted_ids.size()));
  if (detail::has_duplicates(real_ids)) throw argument_error("survey: duplicate real ids");
  if (detail::has_duplicates(predicted_ids))
    throw argument_error("survey: duplicate predicted ids");
  for (const std::string& id : predicted_ids)
    if (std::find(real_ids.begin(), real_ids.end(), id) != real_ids.end())
      throw argument_error("survey: id '" + id + "' appears in both halves");

  Survey survey;
  survey.items = real_ids;
  survey.items.insert(survey.items.end(), predicted_ids.begin(), predicted_ids.end());
  std::mt19937_64 rng(seed);
  shuffle(survey.items, rng);

  key.items = survey.items;
  key.predicted = predicted_ids;
  std::sort(key.predicted.begin(), key.predicted.end());
  return survey;
}

/// Fraction of the synthetic half each participant found, averaged. Guessing
/// blind is a 16-from-32 draw, so the long-run chance score is one half.
inline SurveyScore score_survey(const SurveyKey& key,
                                const std::vector<SurveyResponse>& responses) {
  if (key.predicted.size() != kSurveyHalf || key.items.size() != 2 * kSurveyHalf)
    throw validation_error("survey: malformed key");
  if (responses.empty()) throw validation_error("survey: no responses to score");
  const std::set<std::string> item_set(key.items.begin(), key.items.end());
  const std::set<std::string> predicted_set(key.predicted.begin(), key.predicted.end());

  SurveyScore score;
  for (const SurveyResponse& r : responses) {
    if (!r.shown.empty() &&
        (r.shown.size() != key.items.size() ||
         std::set<std::string>(r.shown.begin(), r.shown.end()) != item_set))
      throw validation_error("survey: participant '" + r.participant_id +
                             "' was shown a different item set than the key describes");
    if (r.selected.size() != kSurveyHalf)
      throw validation_error("survey: participant '" + r.participant_id + "' selected " +
                             std::to_string(r.selected.size()) + " items, expected " +
                             std::to_string(kSurveyHalf));
    if (detail::has_duplicates(r.selected))
      throw validation_error("survey: participant '" + r.participant_id +
                             "' selected the same id twice");
    int hits = 0;
    for (const std::string& id : r.selected) {
      if (!item_set.count(id))
        throw validation_error("survey: participant '" + r.participant_id +
                               "' selected unknown id '" + id + "'");
      if (predicted_set.count(id)) ++hits;
    }
    score.per_participant.push_back(static_cast<double>(hits) / kSurveyHalf);
  }
  double sum = 0.0;
  for (double s : score.per_participant) sum += s;
  score.mean_score = sum / static_cast<double>(score.per_participant.size());
  return score;
}

/// Seeded k-without-replacement draw, used to pick the survey halves.
inline std::vector<std::string> sample_ids(const std::vector<std::string>& pool, int k,
                                           std::uint64_t seed) {
  if (k < 0 || static_cast<std::size_t>(k) > pool.size())
    throw argument_error("sample_ids: cannot draw " + std::to_string(k) + " from " +
                         std::to_string(pool.size()));
  std::vector<std::string> shuffled = pool;
  std::mt19937_64 rng(seed);
  shuffle(shuffled, rng);
  shuffled.resize(k);
  return shuffled;
}

// ---- survey serialization ------------------------------------------------

/// One JSON object per line: {"index": n, "image_id": "..."}.
inline void write_survey_items(const Survey& survey, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot write survey items '" + path.string() + "'");
  for (std::size_t i = 0; i < survey.items.size(); ++i)
    os << nlohmann::json{{"index", i}, {"image_id", survey.items[i]}}.dump() << '\n';
  if (!os.flush()) throw io_error("failed writing survey items '" + path.string() + "'");
}

inline Survey read_survey_items(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot read survey items '" + path.string() + "'");
  Survey survey;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      survey.items.push_back(nlohmann::json::parse(line).at("image_id").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw io_error("bad survey item at " + path.string() + ":" + std::to_string(lineno) + ": " +
                     e.what());
    }
  }
  return survey;
}

inline void write_survey_key(const SurveyKey& key, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot write survey key '" + path.string() + "'");
  os << nlohmann::json{{"items", key.items}, {"predicted", key.predicted}}.dump(2) << '\n';
  if (!os.flush()) throw io_error("failed writing survey key '" + path.string() + "'");
}

inline SurveyKey read_survey_key(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot read survey key '" + path.string() + "'");
  try {
    const nlohmann::json j = nlohmann::json::parse(is);
    SurveyKey key;
    key.items = j.at("items").get<std::vector<std::string>>();
    key.predicted = j.at("predicted").get<std::vector<std::string>>();
    return key;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("bad survey key '" + path.string() + "': " + e.what());
  }
}

/// One JSON object per line: {"participant_id", "shown", "selected"}.
inline void write_survey_responses(const std::vector<SurveyResponse>& responses,
                                   const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot write survey responses '" + path.string() + "'");
  for (const SurveyResponse& r : responses)
    os << nlohmann::json{{"participant_id", r.participant_id},
                         {"shown", r.shown},
                         {"selected", r.selected}}
              .dump()
       << '\n';
  if (!os.flush()) throw io_error("failed writing survey responses '" + path.string() + "'");
}

inline std::vector<SurveyResponse> read_survey_responses(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot read survey responses '" + path.string() + "'");
  std::vector<SurveyResponse> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      SurveyResponse r;
      r.participant_id = j.at("participant_id").get<std::string>();
      if (j.contains("shown")) r.shown = j.at("shown").get<std::vector<std::string>>();
      r.selected = j.at("selected").get<std::vector<std::string>>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw io_error("bad survey response at " + path.string() + ":" + std::to_string(lineno) +
                     ": " + e.what());
    }
  }
  return out;
}

}  // namespace microcolor
