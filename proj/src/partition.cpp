#include "statmix/partition.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace statmix {

NodePartition stratified_split(const Dataset& ds, int n_nodes, RandomStream rng) {
  if (n_nodes < 1) throw std::runtime_error("stratified_split: n_nodes must be >= 1");

  std::vector<std::vector<std::uint32_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const int label = ds.images[i].label;
    if (label < 0 || label >= ds.num_classes) {
      throw std::runtime_error("stratified_split: image " + std::to_string(i) +
                               " has out-of-range label " + std::to_string(label));
    }
    by_class[static_cast<std::size_t>(label)].push_back(static_cast<std::uint32_t>(i));
  }
  for (int c = 0; c < ds.num_classes; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < static_cast<std::size_t>(n_nodes)) {
      throw std::runtime_error("stratified_split: class " + std::to_string(c) + " has only " +
                               std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                               " members, fewer than n_nodes=" + std::to_string(n_nodes));
    }
  }

  NodePartition part;
  part.n_nodes = n_nodes;
  part.assignments.assign(ds.images.size(), 0);
  part.per_node_ids.assign(static_cast<std::size_t>(n_nodes), {});

  for (auto& indices : by_class) {
    rng.shuffle(indices);
    for (std::size_t j = 0; j < indices.size(); ++j) {
      const auto node = static_cast<std::uint32_t>(j % static_cast<std::size_t>(n_nodes));
      part.assignments[indices[j]] = node;
      part.per_node_ids[node].push_back(indices[j]);
    }
  }
  for (auto& ids : part.per_node_ids) std::sort(ids.begin(), ids.end());
  return part;
}

void write_partition_manifest(const NodePartition& part, std::uint64_t seed, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << "n_nodes=" << part.n_nodes << " seed=" << seed << "\n";
  for (std::size_t i = 0; i < part.assignments.size(); ++i) {
    out << i << "\t" << part.assignments[i] << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

NodePartition read_partition_manifest(const std::string& path, std::uint64_t* seed_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty partition manifest: " + path);
  int n_nodes = 0;
  unsigned long long seed = 0;
  if (std::sscanf(header.c_str(), "n_nodes=%d seed=%llu", &n_nodes, &seed) != 2 || n_nodes < 1) {
    throw std::runtime_error("malformed partition manifest header: '" + header + "'");
  }
  if (seed_out) *seed_out = static_cast<std::uint64_t>(seed);

  NodePartition part;
  part.n_nodes = n_nodes;
  part.per_node_ids.assign(static_cast<std::size_t>(n_nodes), {});

  std::string line;
  std::size_t expected_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t index = 0;
    std::uint32_t node = 0;
    if (!(ls >> index >> node) || node >= static_cast<std::uint32_t>(n_nodes)) {
      throw std::runtime_error("malformed partition manifest line: '" + line + "'");
    }
    if (index != expected_index) {
      throw std::runtime_error("partition manifest indices must be consecutive; expected " +
                               std::to_string(expected_index) + ", got " + std::to_string(index));
    }
    part.assignments.push_back(node);
    part.per_node_ids[node].push_back(static_cast<std::uint32_t>(index));
    ++expected_index;
  }
  return part;
}

}  // namespace statmix
