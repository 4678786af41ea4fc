// Command-line front end for the microcolor library: dataset splitting,
// network training, both colorization modes, and the analysis/survey tools.
// Every run with the same inputs and seeds writes byte-identical outputs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <microcolor/microcolor.hpp>

namespace mc = microcolor;
namespace fs = std::filesystem;

namespace {

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw mc::argument_error(flag + ": '" + tok + "' is not an integer");
    }
  }
  if (out.empty()) throw mc::argument_error(flag + ": empty list");
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> read_id_lines(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw mc::io_error("cannot read id list '" + path.string() + "'");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void dump_planes(const fs::path& dir, const mc::Plane& l, const mc::ChromaMap& ab) {
  fs::create_directories(dir);
  mc::write_plane_csv(l, dir / "l.csv");
  mc::write_plane_csv(ab.a, dir / "a.csv");
  mc::write_plane_csv(ab.b, dir / "b.csv");
}

void write_json_file(const nlohmann::json& j, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw mc::io_error("cannot write '" + path.string() + "'");
  os << j.dump(2) << '\n';
  if (!os.flush()) throw mc::io_error("failed writing '" + path.string() + "'");
}

// ---- dataset-split --------------------------------------------------------

struct SplitArgs {
  std::string input_dir;
  std::string output;
  double ratio = 0.9;
  std::uint64_t split_seed = 0;
};

void run_dataset_split(const SplitArgs& a) {
  const auto files = mc::list_image_files(a.input_dir);
  if (files.empty()) throw mc::io_error("no images found under '" + a.input_dir + "'");
  const mc::DatasetManifest manifest = mc::make_split(files, a.ratio, a.split_seed);
  mc::write_manifest(manifest, a.output);
  std::cout << "wrote " << a.output << ": " << manifest.count(mc::SampleRole::train)
            << " train, " << manifest.count(mc::SampleRole::test) << " test\n";
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string output;
  int width = 300, height = 300;
  std::string encoder_channels = "64,128,128,256,256,512,512,512";
  std::string stride2_layers = "1,3,5";
  int embedding_dim = 1000;
  int fusion_channels = 256;
  int decoder_stages = 3;
  double ab_scale = 128.0;
  bool no_embedding = false;
  double lr = 1e-4;
  int batch_size = 16;
  int max_epochs = 300;
  int patience = 10;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  std::string checkpoint_dir;
  int checkpoint_every = 0;
  std::string loss_log;
};

mc::EeCnnConfig config_from_train_args(const TrainArgs& a) {
  mc::EeCnnConfig cfg;
  cfg.encoder_channels = parse_int_list(a.encoder_channels, "--encoder-channels");
  cfg.stride2_layers = parse_int_list(a.stride2_layers, "--stride2-layers");
  cfg.embedding_dim = a.embedding_dim;
  cfg.fusion_channels = a.fusion_channels;
  cfg.decoder_stages = a.decoder_stages;
  cfg.ab_scale = a.ab_scale;
  cfg.use_embedding = !a.no_embedding;
  cfg.validate();
  return cfg;
}

void run_train(const TrainArgs& a) {
  mc::DatasetManifest manifest = mc::read_manifest(a.manifest);
  manifest.resize_width = a.width;
  manifest.resize_height = a.height;

  const mc::EeCnnConfig cfg = config_from_train_args(a);
  mc::EeCnnModel model(cfg, a.seed);
  const mc::ConstantEmbedder provider = mc::standard_embedder(cfg, a.seed);

  mc::TrainConfig tc;
  tc.learning_rate = a.lr;
  tc.batch_size = a.batch_size;
  tc.max_epochs = a.max_epochs;
  tc.patience = a.patience;
  tc.min_delta = a.min_delta;
  tc.seed = a.seed;
  tc.checkpoint_dir = a.checkpoint_dir;
  tc.checkpoint_every = a.checkpoint_every;

  const mc::TrainReport report = mc::train_eecnn(model, manifest, provider, tc);
  mc::save_checkpoint(model.export_weights(), a.output);
  if (!a.loss_log.empty()) report.write_csv(a.loss_log);

  std::cout << "trained " << report.epochs_run << " epochs; best validation loss "
            << report.best_val << " at epoch " << report.best_epoch << "; weights in " << a.output
            << "\n";
}

// ---- colorize-ee -----------------------------------------------------------

mc::Aggregator parse_aggregator(const std::string& name) {
  if (name == "mean") return mc::Aggregator::mean;
  if (name == "median") return mc::Aggregator::median;
  throw mc::argument_error("--aggregate: unknown aggregator '" + name + "'");
}

/// Shared cleanup stage of both colorize commands: optional edge-guided
/// region fill, then optional same-L-same-chroma binning.
mc::ChromaMap postprocess(const mc::Plane& l, mc::ChromaMap ab, double edge_threshold,
                          double bin_width, mc::Aggregator agg) {
  if (edge_threshold > 0.0) {
    const mc::GradientMagnitudeDetector detector;
    const mc::RegionMask regions = mc::label_regions(mc::detect_edges(l, detector), edge_threshold);
    ab = mc::uniform_fill(ab, regions, agg);
  }
  if (bin_width > 0.0) ab = mc::enforce_same_l_same_ab(l, ab, bin_width, std::nullopt, agg);
  return ab;
}

struct ColorizeEeArgs {
  std::string weights;
  std::string input;
  std::string output;
  double bin_width = 0.0;      // 0 = leave the raw prediction alone
  double edge_threshold = 0.0;  // 0 = no region fill
  std::string aggregate = "mean";
  std::string debug_planes;
};

void run_colorize_ee(const ColorizeEeArgs& a) {
  const mc::ModelWeights weights = mc::load_checkpoint(a.weights);
  const mc::EeCnnConfig cfg = mc::EeCnnConfig::parse(weights.config_description);
  const mc::EeCnnModel model(cfg, weights);
  const mc::ConstantEmbedder provider = mc::standard_embedder(cfg, weights.init_seed);

  const mc::RgbImage input = mc::load_image(a.input);
  const auto [l, _] = mc::split_l_ab(mc::rgb_to_lab(input));
  mc::ChromaMap ab = model.forward(l, provider);
  ab = postprocess(l, std::move(ab), a.edge_threshold, a.bin_width, parse_aggregator(a.aggregate));
  if (!a.debug_planes.empty()) dump_planes(a.debug_planes, l, ab);
  mc::save_image(mc::lab_to_rgb(mc::merge_l_ab(l, ab)), a.output);
  std::cout << "colorized " << a.input << " -> " << a.output << "\n";
}

// ---- colorize-nst ----------------------------------------------------------

struct ColorizeNstArgs {
  std::string input;
  std::vector<std::string> references;
  std::vector<std::string> masks;
  std::string output;
  int budget = 2000;
  double threshold = 1.0;
  double fit_lr = 1e-3;
  std::uint64_t seed = 0;
  double bin_width = 1.0;
  double edge_threshold = 0.0;
  std::string aggregate = "mean";
  std::string weights_cache;
  std::string debug_planes;
};

void run_colorize_nst(const ColorizeNstArgs& a) {
  if (!a.masks.empty() && a.masks.size() != a.references.size())
    throw mc::argument_error("--mask given " + std::to_string(a.masks.size()) + " times for " +
                             std::to_string(a.references.size()) + " references");

  const mc::RgbImage input = mc::load_image(a.input);
  const auto [l, _] = mc::split_l_ab(mc::rgb_to_lab(input));

  mc::TransferJob job;
  job.content_l = l;
  job.post_bin_width = a.bin_width;
  job.post_aggregator = parse_aggregator(a.aggregate);
  job.fit.budget = a.budget;
  job.fit.convergence_threshold = a.threshold;
  job.fit.learning_rate = a.fit_lr;
  job.fit.seed = a.seed;
  for (std::size_t i = 0; i < a.references.size(); ++i) {
    mc::ReferenceSpec ref;
    ref.image = mc::load_image(a.references[i]);
    if (!a.masks.empty()) ref.mask = mc::mask_from_image(mc::load_image(a.masks[i]));
    job.references.push_back(std::move(ref));
  }

  const mc::ConstantEmbedder provider = mc::standard_embedder(job.fit.config, a.seed);

  mc::TransferResult result;
  if (a.weights_cache.empty()) {
    result = mc::transfer(job, provider);
  } else {
    fs::create_directories(a.weights_cache);
    std::vector<mc::ModelWeights> weights;
    for (std::size_t r = 0; r < job.references.size(); ++r) {
      mc::FitOptions opt = job.fit;
      opt.seed = mc::derive_seed(job.fit.seed, r);
      const fs::path slot =
          fs::path(a.weights_cache) / (hex64(mc::reference_fingerprint(job.references[r].image, opt)) + ".ckpt");
      if (fs::exists(slot)) {
        weights.push_back(mc::load_checkpoint(slot));
      } else {
        const mc::FitResult fit = mc::fit_reference(job.references[r].image, opt, provider);
        mc::save_checkpoint(fit.weights, slot);
        weights.push_back(fit.weights);
      }
    }
    result = mc::transfer_with_weights(job, weights, provider);
  }

  for (std::size_t r = 0; r < result.fits.size(); ++r)
    if (result.fits[r].steps_used > 0 || a.weights_cache.empty())
      std::cout << "reference " << r + 1 << ": " << result.fits[r].steps_used << " steps, loss "
                << result.fits[r].final_loss
                << (result.fits[r].converged ? " (converged)" : "") << "\n";

  if (a.edge_threshold > 0.0)
    result.ab = postprocess(l, std::move(result.ab), a.edge_threshold, 0.0,
                            parse_aggregator(a.aggregate));
  if (!a.debug_planes.empty()) dump_planes(a.debug_planes, l, result.ab);
  mc::save_image(mc::lab_to_rgb(mc::merge_l_ab(l, result.ab)), a.output);
  std::cout << "colorized " << a.input << " -> " << a.output << "\n";
}

// ---- analyze ---------------------------------------------------------------

struct SaturationArgs {
  std::string input;
  int block = 16;
  std::string output;
  std::string heatmap;
};

void run_analyze_saturation(const SaturationArgs& a) {
  const mc::SaturationSurface surf = mc::saturation_surface(mc::load_image(a.input), a.block);
  if (!a.output.empty()) mc::write_plane_csv(mc::surface_plane(surf), a.output);
  if (!a.heatmap.empty()) mc::save_image(mc::render_saturation(surf), a.heatmap);
  double mean = 0.0;
  for (double s : surf.mean_s) mean += s;
  mean /= static_cast<double>(surf.mean_s.size());
  std::cout << "saturation grid " << surf.grid_w << "x" << surf.grid_h << ", mean " << mean
            << "\n";
}

struct HueArgs {
  std::string input;
  int bins = 36;
  std::string output;
};

void run_analyze_hue(const HueArgs& a) {
  const mc::HueHistogram hist = mc::hue_histogram(mc::load_image(a.input), a.bins);
  if (!a.output.empty()) write_json_file(mc::to_json(hist), a.output);
  std::cout << "hue histogram: " << hist.total() - hist.neutral << " chromatic, " << hist.neutral
            << " neutral pixels\n";
}

struct ScoreArgs {
  std::string key;
  std::string responses;
  std::string output;
};

void run_analyze_survey(const ScoreArgs& a) {
  const mc::SurveyKey key = mc::read_survey_key(a.key);
  const auto responses = mc::read_survey_responses(a.responses);
  const mc::SurveyScore score = mc::score_survey(key, responses);
  if (!a.output.empty())
    write_json_file({{"mean_score", score.mean_score},
                     {"chance_level", score.chance_level},
                     {"participants", score.per_participant.size()},
                     {"per_participant", score.per_participant}},
                    a.output);
  std::cout << "mean detection score " << score.mean_score << " over "
            << score.per_participant.size() << " participants (chance " << score.chance_level
            << ")\n";
}

// ---- survey (builder) -------------------------------------------------------

struct SurveyBuildArgs {
  std::string real_ids;
  std::string predicted_ids;
  std::uint64_t seed = 0;
  std::string items_out;
  std::string key_out;
};

void run_survey_build(const SurveyBuildArgs& a) {
  const auto real_pool = read_id_lines(a.real_ids);
  const auto pred_pool = read_id_lines(a.predicted_ids);
  const auto real = mc::sample_ids(real_pool, mc::kSurveyHalf, mc::derive_seed(a.seed, 1));
  const auto pred = mc::sample_ids(pred_pool, mc::kSurveyHalf, mc::derive_seed(a.seed, 2));
  mc::SurveyKey key;
  const mc::Survey survey = mc::build_survey(real, pred, a.seed, key);
  mc::write_survey_items(survey, a.items_out);
  mc::write_survey_key(key, a.key_out);
  std::cout << "survey with " << survey.items.size() << " items -> " << a.items_out
            << ", key -> " << a.key_out << "\n";
}

void fail(const char* kind, const std::exception& e) {
  std::cerr << "error: " << kind << ": " << e.what() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"microcolor: grayscale microscopy colorization"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from an ini file (section per subcommand)");
  app.set_version_flag("--version", std::string("microcolor ") + mc::kVersion +
                                        " (checkpoint format " +
                                        std::to_string(mc::kCheckpointFormatVersion) + ")");
  app.footer(
      "Exit codes:\n"
      "  0 success            2 usage or bad argument   3 file i/o\n"
      "  4 geometry mismatch  5 mask coverage           6 checkpoint\n"
      "  7 diverged           8 survey validation       1 anything else");

  SplitArgs split;
  CLI::App* c_split = app.add_subcommand("dataset-split", "split an image folder into train/test");
  c_split->add_option("--dir,--input-dir", split.input_dir, "folder with images")->required();
  c_split->add_option("--out,--output", split.output, "manifest file to write")->required();
  c_split->add_option("--ratio", split.ratio, "train fraction")->capture_default_str();
  c_split->add_option("--split-seed", split.split_seed, "shuffle seed")->capture_default_str();

  TrainArgs train;
  CLI::App* c_train = app.add_subcommand("train", "fit the colorization network on a manifest");
  c_train->add_option("--manifest", train.manifest, "dataset manifest")->required();
  c_train->add_option("--out,--output", train.output, "checkpoint file to write")->required();
  c_train->add_option("--width", train.width, "resize width")->capture_default_str();
  c_train->add_option("--height", train.height, "resize height")->capture_default_str();
  c_train->add_option("--encoder-channels", train.encoder_channels, "comma list")
      ->capture_default_str();
  c_train->add_option("--stride2-layers", train.stride2_layers, "comma list, 1-indexed")
      ->capture_default_str();
  c_train->add_option("--embedding-dim", train.embedding_dim)->capture_default_str();
  c_train->add_option("--fusion-channels", train.fusion_channels)->capture_default_str();
  c_train->add_option("--decoder-stages", train.decoder_stages)->capture_default_str();
  c_train->add_option("--ab-scale", train.ab_scale)->capture_default_str();
  c_train->add_flag("--no-embedding", train.no_embedding, "skip the embedding branch");
  c_train->add_option("--lr", train.lr, "learning rate")->capture_default_str();
  c_train->add_option("--batch-size", train.batch_size)->capture_default_str();
  c_train->add_option("--epochs,--max-epochs", train.max_epochs)->capture_default_str();
  c_train->add_option("--patience", train.patience, "early-stop patience")->capture_default_str();
  c_train->add_option("--min-delta", train.min_delta, "early-stop margin")->capture_default_str();
  c_train->add_option("--seed", train.seed, "init and shuffle seed")->capture_default_str();
  c_train->add_option("--checkpoint-dir", train.checkpoint_dir, "where periodic snapshots go");
  c_train->add_option("--checkpoint-every", train.checkpoint_every, "epochs between snapshots")
      ->capture_default_str();
  c_train->add_option("--loss-log", train.loss_log, "per-epoch loss csv");

  ColorizeEeArgs cee;
  CLI::App* c_cee = app.add_subcommand("colorize-ee", "colorize with a trained checkpoint");
  c_cee->add_option("--weights", cee.weights, "checkpoint file")->required();
  c_cee->add_option("--input", cee.input, "grayscale image")->required();
  c_cee->add_option("--out,--output", cee.output, "colorized image")->required();
  c_cee->add_option("--bin-width", cee.bin_width,
                    "enforce same chroma per luminance bin (0 = off)")
      ->capture_default_str();
  c_cee->add_option("--edge-threshold", cee.edge_threshold,
                    "fill edge-bounded regions uniformly (0 = off)")
      ->capture_default_str();
  c_cee->add_option("--aggregate", cee.aggregate, "group aggregator: mean or median")
      ->capture_default_str();
  c_cee->add_option("--debug-planes", cee.debug_planes, "folder for L/a/b csv dumps");

  ColorizeNstArgs nst;
  CLI::App* c_nst = app.add_subcommand("colorize-nst", "colorize from reference images");
  c_nst->add_option("--input", nst.input, "grayscale content image")->required();
  c_nst->add_option("--reference", nst.references, "color reference (repeatable)")->required();
  c_nst->add_option("--mask", nst.masks, "content mask per reference, same order");
  c_nst->add_option("--out,--output", nst.output, "colorized image")->required();
  c_nst->add_option("--budget", nst.budget, "max fit steps per reference")->capture_default_str();
  c_nst->add_option("--threshold", nst.threshold, "stop fitting below this loss")
      ->capture_default_str();
  c_nst->add_option("--fit-lr", nst.fit_lr, "fit learning rate")->capture_default_str();
  c_nst->add_option("--seed", nst.seed, "fit seed")->capture_default_str();
  c_nst->add_option("--bin-width", nst.bin_width, "luminance bin for chroma cleanup")
      ->capture_default_str();
  c_nst->add_option("--edge-threshold", nst.edge_threshold,
                    "fill edge-bounded regions uniformly (0 = off)")
      ->capture_default_str();
  c_nst->add_option("--aggregate", nst.aggregate, "group aggregator: mean or median")
      ->capture_default_str();
  c_nst->add_option("--weights-cache", nst.weights_cache, "folder of fitted reference weights");
  c_nst->add_option("--debug-planes", nst.debug_planes, "folder for L/a/b csv dumps");

  CLI::App* c_an = app.add_subcommand("analyze", "measurements over images and surveys");
  c_an->require_subcommand(1);

  SaturationArgs sat;
  CLI::App* c_sat = c_an->add_subcommand("saturation", "block-averaged saturation surface");
  c_sat->add_option("--input", sat.input, "image")->required();
  c_sat->add_option("--block-size,--block", sat.block, "block size in pixels")->capture_default_str();
  c_sat->add_option("--out,--output", sat.output, "comma-separated grid output");
  c_sat->add_option("--heatmap", sat.heatmap, "grayscale heatmap image");

  HueArgs hue;
  CLI::App* c_hue = c_an->add_subcommand("hue", "hue histogram (neutral pixels tallied apart)");
  c_hue->add_option("--input", hue.input, "image")->required();
  c_hue->add_option("--bins", hue.bins, "bin count over [0,360)")->capture_default_str();
  c_hue->add_option("--out,--output", hue.output, "json output");

  ScoreArgs score;
  CLI::App* c_score = c_an->add_subcommand("survey", "score survey responses against a key");
  c_score->add_option("--key", score.key, "survey key json")->required();
  c_score->add_option("--responses", score.responses, "responses jsonl")->required();
  c_score->add_option("--out,--output", score.output, "json output");

  SurveyBuildArgs sb;
  CLI::App* c_survey = app.add_subcommand("survey", "assemble a real-vs-predicted survey");
  c_survey->add_option("--real-ids", sb.real_ids, "file of genuine image ids, one per line")
      ->required();
  c_survey->add_option("--predicted-ids", sb.predicted_ids,
                       "file of colorized image ids, one per line")
      ->required();
  c_survey->add_option("--seed", sb.seed, "sampling/shuffle seed")->capture_default_str();
  c_survey->add_option("--items", sb.items_out, "survey items jsonl")->required();
  c_survey->add_option("--key", sb.key_out, "hidden key json")->required();

  c_split->callback([&] { run_dataset_split(split); });
  c_train->callback([&] { run_train(train); });
  c_cee->callback([&] { run_colorize_ee(cee); });
  c_nst->callback([&] { run_colorize_nst(nst); });
  c_sat->callback([&] { run_analyze_saturation(sat); });
  c_hue->callback([&] { run_analyze_hue(hue); });
  c_score->callback([&] { run_analyze_survey(score); });
  c_survey->callback([&] { run_survey_build(sb); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const mc::argument_error& e) {
    fail("argument", e);
    return 2;
  } catch (const mc::mask_error& e) {
    fail("mask", e);
    return 5;
  } catch (const mc::fingerprint_error& e) {
    fail("checkpoint", e);
    return 6;
  } catch (const mc::checkpoint_error& e) {
    fail("checkpoint", e);
    return 6;
  } catch (const mc::divergence_error& e) {
    fail("divergence", e);
    return 7;
  } catch (const mc::validation_error& e) {
    fail("validation", e);
    return 8;
  } catch (const mc::shape_error& e) {
    fail("shape", e);
    return 4;
  } catch (const mc::io_error& e) {
    fail("io", e);
    return 3;
  } catch (const std::exception& e) {
    fail("unexpected", e);
    return 1;
  }
  return 0;
}
