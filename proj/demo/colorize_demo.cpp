// End-to-end demo on synthetic data: build a grayscale "content" image and a
// colored reference whose chroma is a simple function of luminance, fit the
// reference-guided model, transfer color onto the content, and write the
// results as PNGs.  Runs in a few seconds and needs no dataset.
//
// Usage: microcolor-demo [output-dir]

#include <cstdio>
#include <filesystem>
#include <string>

#include <microcolor/microcolor.hpp>

namespace {

// A ramp with two darker rectangles, so the transfer has structure to color.
microcolor::Plane make_content(int w, int h) {
  microcolor::Plane l(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 25.0 + 55.0 * x / (w - 1);
      if (x >= w / 8 && x < w / 2 - 2 && y >= h / 5 && y < h / 2) v = 20.0;
      if (x >= w / 2 + 2 && x < 7 * w / 8 && y >= h / 2 && y < 4 * h / 5) v = 82.0;
      l.at(x, y) = v;
    }
  return l;
}

// Reference: smooth luminance ramp with chroma tied to it (warm shadows,
// green-ish highlights).  The model only sees (L -> AB) pairs, so any rule
// works as long as it is a function of luminance.
microcolor::RgbImage make_reference(int w, int h) {
  microcolor::LabImage lab{microcolor::Plane(w, h), microcolor::Plane(w, h),
                           microcolor::Plane(w, h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double l = 20.0 + 60.0 * (x + y) / double(w + h - 2);
      lab.l.at(x, y) = l;
      lab.a.at(x, y) = l - 50.0;
      lab.b.at(x, y) = 30.0 - 0.5 * l;
    }
  return microcolor::lab_to_rgb(lab);
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path out_dir = argc > 1 ? argv[1] : "demo-out";
  std::filesystem::create_directories(out_dir);

  const int w = 64, h = 48;
  microcolor::Plane content = make_content(w, h);
  microcolor::RgbImage reference = make_reference(w, h);

  microcolor::TransferJob job;
  job.content_l = content;
  job.references.push_back({reference, std::nullopt});
  job.fit.budget = 600;
  job.fit.seed = 7;

  microcolor::ConstantEmbedder provider =
      microcolor::standard_embedder(job.fit.config, job.fit.seed);
  microcolor::TransferResult result = microcolor::transfer(job, provider);

  const auto& fit = result.fits.front();
  std::printf("fit: %d steps, final loss %.4f%s\n", fit.steps_used, fit.final_loss,
              fit.converged ? " (converged)" : "");

  // Save the inputs and the colorized output side by side.
  microcolor::RgbImage colorized =
      microcolor::lab_to_rgb(microcolor::merge_l_ab(content, result.ab));
  microcolor::save_image(reference, out_dir / "reference.png");
  microcolor::Plane content01(w, h);
  for (std::size_t i = 0; i < content.v.size(); ++i) content01.v[i] = content.v[i] / 100.0;
  microcolor::save_gray01(content01, out_dir / "content.png");
  microcolor::save_image(colorized, out_dir / "colorized.png");

  // A quick look at what the transfer produced.
  microcolor::SaturationSurface surf = microcolor::saturation_surface(colorized, 16);
  std::printf("mean saturation per 16x16 block:\n");
  for (int gy = 0; gy < surf.grid_h; ++gy) {
    for (int gx = 0; gx < surf.grid_w; ++gx) std::printf(" %.3f", surf.at(gx, gy));
    std::printf("\n");
  }

  std::printf("wrote %s/{content,reference,colorized}.png\n", out_dir.string().c_str());
  return 0;
}
