#include "statmix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "statmix/rng.hpp"

namespace statmix {

Dataset make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.num_classes < 1 || spec.per_class < 1 || spec.width < 1 || spec.height < 1) {
    throw std::runtime_error("make_synthetic_dataset: counts and dimensions must be positive");
  }

  constexpr double two_pi = 2.0 * std::numbers::pi;
  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.name = spec.name;
  ds.images.reserve(static_cast<std::size_t>(spec.num_classes) *
                    static_cast<std::size_t>(spec.per_class));

  for (int k = 0; k < spec.per_class; ++k) {
    for (int cls = 0; cls < spec.num_classes; ++cls) {
      RandomStream rng = derive_stream(
          spec.seed, {static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(k)});
      const double brightness = rng.next_double_in(-spec.brightness_jitter, spec.brightness_jitter);
      // class brightness levels spread evenly over [-sep, +sep]
      const double level =
          spec.num_classes == 1
              ? 0.0
              : spec.mean_separation * (2.0 * cls / (spec.num_classes - 1) - 1.0);
      const double fx = 1.0 + cls % 3;
      const double fy = 1.0 + (cls / 3) % 3;
      const double cls_phase = two_pi * cls / spec.num_classes;

      Image img(spec.width, spec.height);
      img.label = cls;
      for (int c = 0; c < Image::kChannels; ++c) {
        const double phase = cls_phase + two_pi * c / 3.0;
        for (int h = 0; h < spec.height; ++h) {
          for (int w = 0; w < spec.width; ++w) {
            const double pattern = spec.pattern_amplitude *
                                   std::sin(two_pi * (fx * w / spec.width + fy * h / spec.height) +
                                            phase);
            const double noise = rng.next_double_in(-spec.pixel_noise, spec.pixel_noise);
            img.channel[c](h, w) = std::clamp(0.5 + level + pattern + brightness + noise, 0.0, 1.0);
          }
        }
      }
      ds.images.push_back(std::move(img));
    }
  }
  return ds;
}

}  // namespace statmix
