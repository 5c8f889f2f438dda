#pragma once

#include <Eigen/Core>

#include <cassert>
#include <cmath>
#include <compare>
#include <cstdint>

#include "statmix/image.hpp"

namespace statmix {

// The six-number set shared per image: per-channel mean and population
// standard deviation, in pixel-value units. This is the only information
// that ever leaves a node.
struct ImageStats {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d stddev = Eigen::Vector3d::Zero();
};

// (node, image-within-node) coordinate of a statistics set.
struct StatsKey {
  std::uint32_t node_id = 0;
  std::uint32_t image_id = 0;

  friend auto operator<=>(const StatsKey&, const StatsKey&) = default;
};

template <typename Scalar>
Scalar channel_mean(const ImageT<Scalar>& img, int c) {
  assert(c >= 0 && c < ImageT<Scalar>::kChannels);
  const auto& ch = img.channel[c];
  // A constant channel yields its value exactly; the accumulated mean can be
  // an ulp off, which would leak a nonzero sigma out of channel_std.
  const Scalar lo = ch.minCoeff();
  if (lo == ch.maxCoeff()) return lo;
  return ch.mean();
}

// Population standard deviation (divisor H*W), two-pass.
template <typename Scalar>
Scalar channel_std(const ImageT<Scalar>& img, int c) {
  assert(c >= 0 && c < ImageT<Scalar>::kChannels);
  const auto& ch = img.channel[c];
  const Scalar mu = channel_mean(img, c);
  if (ch.minCoeff() == ch.maxCoeff()) return Scalar(0);
  return std::sqrt((ch - mu).square().sum() / static_cast<Scalar>(ch.size()));
}

template <typename Scalar>
ImageStats compute_stats(const ImageT<Scalar>& img) {
  ImageStats s;
  for (int c = 0; c < ImageT<Scalar>::kChannels; ++c) {
    s.mean(c) = static_cast<double>(channel_mean(img, c));
    s.stddev(c) = static_cast<double>(channel_std(img, c));
  }
  return s;
}

}  // namespace statmix
