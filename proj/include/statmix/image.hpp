#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace statmix {

// One H x W x 3 image in the real [0, 1] pixel domain (8-bit sources are
// mapped byte/255 on ingestion). Augmented values may legitimately leave
// [0, 1]; nothing in the training path clamps. Channel planes are H x W
// arrays indexed (h, w).
template <typename Scalar>
struct ImageT {
  using Channel = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  static constexpr int kChannels = 3;

  std::array<Channel, kChannels> channel;
  int label = 0;
  // CIFAR-100 superclass byte; kept only so record re-serialization is
  // byte-identical. -1 when the source had a single label byte.
  int coarse_label = -1;

  ImageT() = default;
  ImageT(int width, int height) {
    for (auto& ch : channel) ch = Channel::Zero(height, width);
  }

  int width() const { return static_cast<int>(channel[0].cols()); }
  int height() const { return static_cast<int>(channel[0].rows()); }
  int pixels_per_channel() const { return width() * height(); }
  int value_count() const { return kChannels * pixels_per_channel(); }

  Scalar at(int w, int h, int c) const { return channel[c](h, w); }
  Scalar& at(int w, int h, int c) { return channel[c](h, w); }
};

using Image = ImageT<double>;

template <typename Scalar>
struct DatasetT {
  std::vector<ImageT<Scalar>> images;
  int num_classes = 0;
  std::string name;

  // Uniform dimensions and in-range labels; throws naming the offender.
  void validate() const {
    if (num_classes <= 0) throw std::runtime_error("dataset '" + name + "': num_classes must be positive");
    if (images.empty()) return;
    const int w = images.front().width();
    const int h = images.front().height();
    for (std::size_t i = 0; i < images.size(); ++i) {
      const auto& img = images[i];
      if (img.width() != w || img.height() != h) {
        throw std::runtime_error("dataset '" + name + "': image " + std::to_string(i) +
                                 " has mismatched dimensions");
      }
      if (img.label < 0 || img.label >= num_classes) {
        throw std::runtime_error("dataset '" + name + "': image " + std::to_string(i) +
                                 " has label " + std::to_string(img.label) + " outside [0, " +
                                 std::to_string(num_classes) + ")");
      }
    }
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (const auto& img : images) counts[static_cast<std::size_t>(img.label)]++;
    return counts;
  }
};

using Dataset = DatasetT<double>;

// Flattened feature vector in channel-planar, row-major-within-channel order
// (the CIFAR record order): index = c*H*W + h*W + w.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> flatten(const ImageT<Scalar>& img) {
  const int wd = img.width();
  const int ht = img.height();
  Eigen::Vector<Scalar, Eigen::Dynamic> out(img.value_count());
  Eigen::Index i = 0;
  for (int c = 0; c < ImageT<Scalar>::kChannels; ++c) {
    for (int h = 0; h < ht; ++h) {
      for (int w = 0; w < wd; ++w) {
        out(i++) = img.channel[c](h, w);
      }
    }
  }
  return out;
}

}  // namespace statmix
