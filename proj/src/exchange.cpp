#include "statmix/exchange.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace statmix {

namespace {

void put_u32(std::uint32_t v, std::vector<std::uint8_t>& out) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f32(float v, std::vector<std::uint8_t>& out) { put_u32(std::bit_cast<std::uint32_t>(v), out); }

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace

std::vector<std::uint8_t> encode_records(std::span<const StatsRecord> records) {
  std::vector<std::uint8_t> out;
  out.reserve(records.size() * kWireRecordSize);
  for (const StatsRecord& r : records) {
    put_u32(r.node_id, out);
    put_u32(r.image_id, out);
    for (float m : r.mean) put_f32(m, out);
    for (float s : r.stddev) put_f32(s, out);
  }
  return out;
}

std::vector<StatsRecord> decode_records(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kWireRecordSize != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kWireRecordSize;
    throw std::runtime_error("decode_records: stream length " + std::to_string(bytes.size()) +
                             " is not a multiple of " + std::to_string(kWireRecordSize) +
                             "; partial record at byte offset " + std::to_string(offset));
  }
  std::vector<StatsRecord> records(bytes.size() / kWireRecordSize);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::uint8_t* p = bytes.data() + i * kWireRecordSize;
    StatsRecord& r = records[i];
    r.node_id = get_u32(p);
    r.image_id = get_u32(p + 4);
    for (int c = 0; c < 3; ++c) r.mean[static_cast<std::size_t>(c)] = get_f32(p + 8 + 4 * c);
    for (int c = 0; c < 3; ++c) r.stddev[static_cast<std::size_t>(c)] = get_f32(p + 20 + 4 * c);
    for (int c = 0; c < 3; ++c) {
      if (r.stddev[static_cast<std::size_t>(c)] < 0.0f) {
        throw std::runtime_error("decode_records: negative sigma in record " + std::to_string(i) +
                                 ", channel " + std::to_string(c));
      }
    }
  }
  return records;
}

void append_wire_header(const WireHeader& header, std::vector<std::uint8_t>& out) {
  out.insert(out.end(), kWireMagic.begin(), kWireMagic.end());
  put_u32(header.version, out);
  put_u32(header.n_nodes, out);
  put_u32(header.per_node, out);
}

WireHeader parse_wire_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWireHeaderSize) {
    throw std::runtime_error("wire header truncated: " + std::to_string(bytes.size()) + " bytes");
  }
  if (!std::equal(kWireMagic.begin(), kWireMagic.end(), bytes.begin())) {
    throw std::runtime_error("wire header magic mismatch (want STMX)");
  }
  WireHeader h;
  h.version = get_u32(bytes.data() + 4);
  if (h.version != kWireFormatVersion) {
    throw std::runtime_error("unsupported wire format version " + std::to_string(h.version));
  }
  h.n_nodes = get_u32(bytes.data() + 8);
  h.per_node = get_u32(bytes.data() + 12);
  return h;
}

StatsRecord to_record(const StatsEntry& entry) {
  StatsRecord r;
  r.node_id = entry.first.node_id;
  r.image_id = entry.first.image_id;
  for (int c = 0; c < 3; ++c) {
    r.mean[static_cast<std::size_t>(c)] = static_cast<float>(entry.second.mean(c));
    r.stddev[static_cast<std::size_t>(c)] = static_cast<float>(entry.second.stddev(c));
  }
  return r;
}

StatsEntry to_entry(const StatsRecord& record) {
  StatsEntry e;
  e.first = StatsKey{record.node_id, record.image_id};
  for (int c = 0; c < 3; ++c) {
    e.second.mean(c) = static_cast<double>(record.mean[static_cast<std::size_t>(c)]);
    e.second.stddev(c) = static_cast<double>(record.stddev[static_cast<std::size_t>(c)]);
  }
  return e;
}

StatsRegistry::StatsRegistry(int n_nodes, std::vector<std::uint32_t> per_node_counts,
                             std::vector<StatsEntry> entries)
    : n_nodes_(n_nodes), per_node_counts_(std::move(per_node_counts)), entries_(std::move(entries)) {
  if (n_nodes_ < 0 || per_node_counts_.size() != static_cast<std::size_t>(n_nodes_)) {
    throw std::runtime_error("StatsRegistry: per_node_counts size must equal n_nodes");
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const StatsEntry& a, const StatsEntry& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i - 1].first == entries_[i].first) {
      throw std::runtime_error("StatsRegistry: duplicate key (node " +
                               std::to_string(entries_[i].first.node_id) + ", image " +
                               std::to_string(entries_[i].first.image_id) + ")");
    }
  }
  // Grid check: exactly image_ids 0..K_i-1 for each node i.
  grid_ok_ = entries_.size() == expected_size();
  if (grid_ok_) {
    std::size_t pos = 0;
    for (std::uint32_t node = 0; node < static_cast<std::uint32_t>(n_nodes_) && grid_ok_; ++node) {
      for (std::uint32_t k = 0; k < per_node_counts_[node] && grid_ok_; ++k, ++pos) {
        grid_ok_ = entries_[pos].first == StatsKey{node, k};
      }
    }
  }
}

std::size_t StatsRegistry::expected_size() const {
  return std::accumulate(per_node_counts_.begin(), per_node_counts_.end(), std::size_t{0});
}

const ImageStats& StatsRegistry::lookup(StatsKey key) const {
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), key,
      [](const StatsEntry& e, const StatsKey& k) { return e.first < k; });
  if (it == entries_.end() || !(it->first == key)) {
    throw std::runtime_error("StatsRegistry: no entry for (node " + std::to_string(key.node_id) +
                             ", image " + std::to_string(key.image_id) + ")");
  }
  return it->second;
}

std::vector<StatsEntry> publish_node_stats(std::uint32_t node_id,
                                           const std::vector<Image>& node_images) {
  std::vector<StatsEntry> entries;
  entries.reserve(node_images.size());
  for (std::size_t k = 0; k < node_images.size(); ++k) {
    entries.emplace_back(StatsKey{node_id, static_cast<std::uint32_t>(k)},
                         compute_stats(node_images[k]));
  }
  return entries;
}

std::vector<StatsRegistry> server_distribute(const std::vector<std::vector<StatsEntry>>& published,
                                             WireTap* tap) {
  const auto n_nodes = static_cast<std::uint32_t>(published.size());

  // Node -> server: each node ships exactly one header plus 32 bytes per
  // image. This is the only path statistics take between nodes; routing it
  // through the codec keeps the information bound structural.
  std::vector<std::vector<StatsRecord>> received(published.size());
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    std::vector<StatsRecord> records;
    records.reserve(published[i].size());
    for (const StatsEntry& e : published[i]) {
      if (e.first.node_id != i) {
        throw std::runtime_error("server_distribute: node " + std::to_string(i) +
                                 " published an entry claiming node " +
                                 std::to_string(e.first.node_id));
      }
      records.push_back(to_record(e));
    }
    std::vector<std::uint8_t> message;
    append_wire_header(WireHeader{kWireFormatVersion, n_nodes,
                                  static_cast<std::uint32_t>(records.size())},
                       message);
    const std::vector<std::uint8_t> payload = encode_records(records);
    message.insert(message.end(), payload.begin(), payload.end());
    if (tap) {
      tap->bytes += message.size();
      tap->messages += 1;
    }
    // Server side: parse what actually crossed the wire.
    parse_wire_header(message);
    received[i] = decode_records(std::span(message).subspan(kWireHeaderSize));
  }

  std::vector<std::uint32_t> counts(published.size());
  for (std::size_t i = 0; i < published.size(); ++i) {
    counts[i] = static_cast<std::uint32_t>(published[i].size());
  }

  // Each node keeps its own local double-precision entries; everything
  // foreign arrives at wire precision.
  std::vector<StatsRegistry> registries;
  registries.reserve(published.size());
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    std::vector<StatsEntry> merged = published[i];
    for (std::uint32_t j = 0; j < n_nodes; ++j) {
      if (j == i) continue;
      for (const StatsRecord& r : received[j]) merged.push_back(to_entry(r));
    }
    registries.emplace_back(static_cast<int>(n_nodes), counts, std::move(merged));
  }
  return registries;
}

StatsEntry select_target(const StatsRegistry& registry, RandomStream& rng) {
  if (!registry.complete()) {
    throw std::runtime_error("select_target: registry incomplete (" +
                             std::to_string(registry.size()) + " of " +
                             std::to_string(registry.expected_size()) + " entries)");
  }
  const std::span<const StatsEntry> entries = registry.entries();
  return entries[rng.next_below(entries.size())];
}

void write_registry_dump(const StatsRegistry& registry, const std::string& path) {
  if (!registry.complete()) throw std::runtime_error("write_registry_dump: registry incomplete");
  const auto& counts = registry.per_node_counts();
  for (const std::uint32_t k : counts) {
    if (k != counts.front()) {
      throw std::runtime_error("write_registry_dump: per-node counts are not uniform");
    }
  }
  std::vector<StatsRecord> records;
  records.reserve(registry.size());
  for (const StatsEntry& e : registry.entries()) records.push_back(to_record(e));

  std::vector<std::uint8_t> bytes;
  append_wire_header(WireHeader{kWireFormatVersion, static_cast<std::uint32_t>(registry.n_nodes()),
                                counts.empty() ? 0 : counts.front()},
                     bytes);
  const std::vector<std::uint8_t> payload = encode_records(records);
  bytes.insert(bytes.end(), payload.begin(), payload.end());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

StatsRegistry read_registry_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  const WireHeader header = parse_wire_header(bytes);
  const std::vector<StatsRecord> records = decode_records(std::span(bytes).subspan(kWireHeaderSize));
  std::vector<StatsEntry> entries;
  entries.reserve(records.size());
  for (const StatsRecord& r : records) entries.push_back(to_entry(r));
  StatsRegistry registry(static_cast<int>(header.n_nodes),
                         std::vector<std::uint32_t>(header.n_nodes, header.per_node),
                         std::move(entries));
  if (!registry.complete()) {
    throw std::runtime_error("registry dump '" + path + "' does not contain the declared " +
                             std::to_string(header.n_nodes) + " x " +
                             std::to_string(header.per_node) + " grid");
  }
  return registry;
}

}  // namespace statmix
