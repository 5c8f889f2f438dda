#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "statmix/image.hpp"
#include "statmix/rng.hpp"

namespace statmix {

// Stratified split of a dataset into n_nodes disjoint, label-balanced
// subsets. per_node_ids is sorted ascending within each node; that canonical
// order is what downstream seeding (image_id assignment) relies on.
struct NodePartition {
  std::vector<std::uint32_t> assignments;  // per global image index
  int n_nodes = 0;
  std::vector<std::vector<std::uint32_t>> per_node_ids;
};

// Within each class, indices are shuffled and dealt round-robin to nodes
// 0..N-1, so per-class per-node counts differ by at most one. Throws if any
// class has fewer members than n_nodes, naming the class.
NodePartition stratified_split(const Dataset& ds, int n_nodes, RandomStream rng);

// Text manifest: header line "n_nodes=<N> seed=<seed>", then one
// "<global_index>\t<node_id>" line per image.
void write_partition_manifest(const NodePartition& part, std::uint64_t seed, const std::string& path);
NodePartition read_partition_manifest(const std::string& path, std::uint64_t* seed_out = nullptr);

}  // namespace statmix
