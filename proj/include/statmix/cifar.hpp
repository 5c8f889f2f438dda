#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "statmix/image.hpp"

namespace statmix {

inline constexpr int kCifarSide = 32;
inline constexpr int kCifarPixelBytes = kCifarSide * kCifarSide * Image::kChannels;  // 3072

// Reads the CIFAR binary record format: 1 label byte (or coarse+fine for
// 100-class files; the fine label is kept) followed by 3072 pixel bytes
// stored channel-planar, row-major within a channel. Pixel byte b becomes
// b/255.0. Record order is preserved.
//
// label_bytes 0 infers the layout from num_classes (100 -> 2, else 1).
Dataset load_cifar_binary(const std::string& path, int num_classes, int label_bytes = 0);

// Pixel bytes only (3072), ingestion layout: round(clamp(v, 0, 1) * 255).
// This is the single place where clamping happens.
std::vector<std::uint8_t> to_bytes_u8(const Image& img);

// Re-serializes full records; load followed by save is byte-identical.
// Writes two label bytes when the images carry a coarse label.
void save_cifar_binary(const Dataset& ds, const std::string& path);

// Plain-text portable pixmap (P3), one file per image, for visual inspection.
void write_ppm(const Image& img, const std::string& path);

}  // namespace statmix
