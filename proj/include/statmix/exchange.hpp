#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "statmix/image.hpp"
#include "statmix/rng.hpp"
#include "statmix/stats.hpp"

namespace statmix {

// One 32-byte wire record: node_id u32, image_id u32, mu_0..2 f32, sigma_0..2
// f32, all little-endian. This is the entire inter-node payload for one
// image; pixels never cross a node boundary.
struct StatsRecord {
  std::uint32_t node_id = 0;
  std::uint32_t image_id = 0;
  std::array<float, 3> mean{};
  std::array<float, 3> stddev{};

  friend bool operator==(const StatsRecord&, const StatsRecord&) = default;
};

inline constexpr std::size_t kWireRecordSize = 32;
inline constexpr std::size_t kWireHeaderSize = 16;
inline constexpr std::array<std::uint8_t, 4> kWireMagic{'S', 'T', 'M', 'X'};
inline constexpr std::uint32_t kWireFormatVersion = 1;

// Grid shape declared by a message or dump: magic, version, n_nodes, K.
struct WireHeader {
  std::uint32_t version = kWireFormatVersion;
  std::uint32_t n_nodes = 0;
  std::uint32_t per_node = 0;
};

std::vector<std::uint8_t> encode_records(std::span<const StatsRecord> records);
// Throws on length not a multiple of 32 (naming the byte offset) and on a
// negative sigma field (naming the record index).
std::vector<StatsRecord> decode_records(std::span<const std::uint8_t> bytes);

void append_wire_header(const WireHeader& header, std::vector<std::uint8_t>& out);
WireHeader parse_wire_header(std::span<const std::uint8_t> bytes);

using StatsEntry = std::pair<StatsKey, ImageStats>;

// A node's view of the full N x K statistics grid, entries in canonical
// (node_id, image_id) order. Immutable once built; freely shareable across
// concurrent node workers.
class StatsRegistry {
 public:
  StatsRegistry() = default;
  // Entries may arrive in any order; they are canonicalized. Throws on
  // duplicate keys.
  StatsRegistry(int n_nodes, std::vector<std::uint32_t> per_node_counts,
                std::vector<StatsEntry> entries);

  int n_nodes() const { return n_nodes_; }
  const std::vector<std::uint32_t>& per_node_counts() const { return per_node_counts_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t expected_size() const;
  bool complete() const { return size() == expected_size() && grid_ok_; }

  const ImageStats& lookup(StatsKey key) const;  // total over declared ranges
  std::span<const StatsEntry> entries() const { return entries_; }

 private:
  int n_nodes_ = 0;
  std::vector<std::uint32_t> per_node_counts_;
  std::vector<StatsEntry> entries_;  // sorted by key
  bool grid_ok_ = false;
};

// Local part 1: one entry per image in canonical node order, image_id equal
// to the position.
std::vector<StatsEntry> publish_node_stats(std::uint32_t node_id,
                                           const std::vector<Image>& node_images);

// Byte counter on the node -> server path.
struct WireTap {
  std::uint64_t bytes = 0;
  std::uint64_t messages = 0;
};

// Server part: every node's published entries are serialized to the wire
// format (tap observes the byte stream), decoded server-side, and merged.
// Node i's registry holds its own local double-precision entries plus every
// foreign entry at wire (f32) precision. Throws on duplicate keys.
std::vector<StatsRegistry> server_distribute(const std::vector<std::vector<StatsEntry>>& published,
                                             WireTap* tap = nullptr);

// Local part 2 ingredient: uniform draw over the full N*K grid, own-node
// entries included. Throws if the registry is incomplete.
StatsEntry select_target(const StatsRegistry& registry, RandomStream& rng);

// Registry dump file: 16-byte header then concatenated records. Requires a
// uniform per-node count.
void write_registry_dump(const StatsRegistry& registry, const std::string& path);
StatsRegistry read_registry_dump(const std::string& path);

// Widening/narrowing between registry entries and wire records.
StatsRecord to_record(const StatsEntry& entry);
StatsEntry to_entry(const StatsRecord& record);

}  // namespace statmix
