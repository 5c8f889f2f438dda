#include "statmix/cifar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace statmix {

namespace {

std::vector<std::uint8_t> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

}  // namespace

Dataset load_cifar_binary(const std::string& path, int num_classes, int label_bytes) {
  if (num_classes <= 0) throw std::runtime_error("num_classes must be positive");
  if (label_bytes == 0) label_bytes = (num_classes == 100) ? 2 : 1;
  if (label_bytes != 1 && label_bytes != 2) throw std::runtime_error("label_bytes must be 1 or 2");

  const std::vector<std::uint8_t> bytes = read_all_bytes(path);
  const std::size_t record_size = static_cast<std::size_t>(label_bytes) + kCifarPixelBytes;
  if (bytes.size() % record_size != 0) {
    const std::size_t tail_offset = bytes.size() - bytes.size() % record_size;
    throw std::runtime_error("truncated CIFAR file '" + path + "': partial record at byte offset " +
                             std::to_string(tail_offset) + " (record size " +
                             std::to_string(record_size) + ", file size " +
                             std::to_string(bytes.size()) + ")");
  }

  Dataset ds;
  ds.num_classes = num_classes;
  ds.name = path;
  const std::size_t n_records = bytes.size() / record_size;
  ds.images.reserve(n_records);

  for (std::size_t r = 0; r < n_records; ++r) {
    const std::uint8_t* rec = bytes.data() + r * record_size;
    Image img(kCifarSide, kCifarSide);
    if (label_bytes == 2) {
      img.coarse_label = rec[0];
      img.label = rec[1];
    } else {
      img.label = rec[0];
    }
    if (img.label >= num_classes) {
      throw std::runtime_error("CIFAR file '" + path + "': record " + std::to_string(r) +
                               " has label " + std::to_string(img.label) + " >= num_classes " +
                               std::to_string(num_classes));
    }
    const std::uint8_t* px = rec + label_bytes;
    std::size_t i = 0;
    for (int c = 0; c < Image::kChannels; ++c) {
      for (int h = 0; h < kCifarSide; ++h) {
        for (int w = 0; w < kCifarSide; ++w) {
          img.channel[c](h, w) = static_cast<double>(px[i++]) / 255.0;
        }
      }
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

std::vector<std::uint8_t> to_bytes_u8(const Image& img) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(img.value_count()));
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int h = 0; h < img.height(); ++h) {
      for (int w = 0; w < img.width(); ++w) {
        const double v = std::clamp(img.channel[c](h, w), 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
      }
    }
  }
  return out;
}

void save_cifar_binary(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  for (const Image& img : ds.images) {
    if (img.coarse_label >= 0) out.put(static_cast<char>(img.coarse_label));
    out.put(static_cast<char>(img.label));
    const std::vector<std::uint8_t> px = to_bytes_u8(img);
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  const std::vector<std::uint8_t> px = to_bytes_u8(img);
  const int wd = img.width();
  const int ht = img.height();
  const int plane = wd * ht;
  out << "P3\n" << wd << " " << ht << "\n255\n";
  for (int h = 0; h < ht; ++h) {
    for (int w = 0; w < wd; ++w) {
      const int i = h * wd + w;
      out << int(px[i]) << " " << int(px[plane + i]) << " " << int(px[2 * plane + i]);
      out << (w + 1 == wd ? '\n' : ' ');
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace statmix
