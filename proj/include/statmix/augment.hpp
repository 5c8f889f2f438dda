#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "statmix/image.hpp"
#include "statmix/rng.hpp"
#include "statmix/stats.hpp"

namespace statmix {

struct AugmentConfig {
  double p_statmix = 0.5;
  double sigma_floor = 1e-6;  // guards the division for constant channels
  int crop_padding = 4;
  double flip_probability = 0.5;
  bool standard_da_enabled = false;

  void validate() const {
    if (p_statmix < 0.0 || p_statmix > 1.0) throw std::runtime_error("p_statmix must be in [0, 1]");
    if (sigma_floor <= 0.0) throw std::runtime_error("sigma_floor must be positive");
    if (crop_padding < 0) throw std::runtime_error("crop_padding must be non-negative");
    if (flip_probability < 0.0 || flip_probability > 1.0) {
      throw std::runtime_error("flip_probability must be in [0, 1]");
    }
  }
};

// Standardize each channel against the image's own statistics:
// out = (in - mu_c) / max(sigma_c, sigma_floor). A constant channel becomes
// all zeros rather than a division error.
template <typename Scalar>
ImageT<Scalar> normalize_image(const ImageT<Scalar>& img, const ImageStats& own, double sigma_floor) {
  ImageT<Scalar> out = img;
  for (int c = 0; c < ImageT<Scalar>::kChannels; ++c) {
    const Scalar mu = static_cast<Scalar>(own.mean(c));
    const Scalar sigma = static_cast<Scalar>(std::max(own.stddev(c), sigma_floor));
    out.channel[c] = (img.channel[c] - mu) / sigma;
  }
  return out;
}

// Re-statisticize a standardized image: out = norm * sigma_target + mu_target.
// No clamping; training consumes raw values.
template <typename Scalar>
ImageT<Scalar> apply_stats(const ImageT<Scalar>& norm, const ImageStats& target) {
  ImageT<Scalar> out = norm;
  for (int c = 0; c < ImageT<Scalar>::kChannels; ++c) {
    out.channel[c] = norm.channel[c] * static_cast<Scalar>(target.stddev(c)) +
                     static_cast<Scalar>(target.mean(c));
  }
  return out;
}

// The batch-level mixing transform: every image is standardized against its
// own current statistics, then rescaled to the one shared target. Order is
// preserved; nothing outside the batch is touched.
template <typename Scalar>
std::vector<ImageT<Scalar>> statmix_batch(const std::vector<ImageT<Scalar>>& batch,
                                          const ImageStats& target, double sigma_floor) {
  if (batch.empty()) throw std::runtime_error("statmix_batch: batch must be non-empty");
  std::vector<ImageT<Scalar>> out;
  out.reserve(batch.size());
  for (const auto& img : batch) {
    out.push_back(apply_stats(normalize_image(img, compute_stats(img), sigma_floor), target));
  }
  return out;
}

// Zero-pad by `padding` on every side, then take a W x H window whose corner
// is uniform over the (2*padding+1)^2 positions. Column offset is drawn
// before row offset; exactly two draws are consumed regardless of padding.
template <typename Scalar>
ImageT<Scalar> random_crop(const ImageT<Scalar>& img, int padding, RandomStream& rng) {
  const auto positions = static_cast<std::uint64_t>(2 * padding + 1);
  const int dw = static_cast<int>(rng.next_below(positions));
  const int dh = static_cast<int>(rng.next_below(positions));
  if (padding == 0) return img;

  const int wd = img.width();
  const int ht = img.height();
  ImageT<Scalar> out = img;
  for (int c = 0; c < ImageT<Scalar>::kChannels; ++c) {
    typename ImageT<Scalar>::Channel padded =
        ImageT<Scalar>::Channel::Zero(ht + 2 * padding, wd + 2 * padding);
    padded.block(padding, padding, ht, wd) = img.channel[c];
    out.channel[c] = padded.block(dh, dw, ht, wd);
  }
  return out;
}

// Mirror about the vertical axis (w -> W-1-w) with probability p. Exactly one
// draw is consumed.
template <typename Scalar>
ImageT<Scalar> random_hflip(const ImageT<Scalar>& img, double p, RandomStream& rng) {
  const bool flip = rng.next_double() < p;
  if (!flip) return img;
  ImageT<Scalar> out = img;
  for (int c = 0; c < ImageT<Scalar>::kChannels; ++c) {
    out.channel[c] = img.channel[c].rowwise().reverse();
  }
  return out;
}

}  // namespace statmix
