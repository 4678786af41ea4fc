#pragma once

// Umbrella header: grayscale microscopy colorization via luminance-to-chroma
// prediction, plus the surrounding dataset, transfer, cleanup, and
// evaluation machinery.

#include "microcolor/analysis.hpp"
#include "microcolor/colorspace.hpp"
#include "microcolor/dataset.hpp"
#include "microcolor/eecnn.hpp"
#include "microcolor/embedding.hpp"
#include "microcolor/errors.hpp"
#include "microcolor/image.hpp"
#include "microcolor/io.hpp"
#include "microcolor/nstcnn.hpp"
#include "microcolor/prepost.hpp"
#include "microcolor/rng.hpp"
#include "microcolor/trainer.hpp"
#include "microcolor/version.hpp"
#include "microcolor/weights.hpp"
