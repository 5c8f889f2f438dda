#pragma once

#include <cstdint>
#include <string>

#include "statmix/image.hpp"

namespace statmix {

// Synthetic labeled image generator for demos and pipeline tests. The class
// signal has two parts: a per-class brightness level (visible to channel
// statistics, and therefore randomized by statistics mixing) and a weak
// class-specific sinusoidal pattern (which survives it). Per-image
// brightness jitter and pixel noise keep the task non-trivial and the
// per-image statistics varied.
struct SyntheticSpec {
  int num_classes = 10;
  int per_class = 100;
  int width = 32;
  int height = 32;
  std::uint64_t seed = 0;
  double mean_separation = 0.10;    // half-spread of class brightness levels
  double pattern_amplitude = 0.05;  // spatial sinusoid amplitude
  double brightness_jitter = 0.24;  // per-image uniform offset amplitude
  double pixel_noise = 0.30;        // per-pixel uniform noise amplitude
  std::string name = "synthetic";
};

Dataset make_synthetic_dataset(const SyntheticSpec& spec);

}  // namespace statmix
