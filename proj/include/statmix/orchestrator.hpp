#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "statmix/augment.hpp"
#include "statmix/exchange.hpp"
#include "statmix/image.hpp"
#include "statmix/trainer.hpp"

namespace statmix {

// Full experiment description. Two configs with equal fields produce
// bit-identical results, no matter how many workers execute the nodes.
struct SimConfig {
  int n_nodes = 5;
  double p_statmix = 0.5;
  bool standard_da = false;
  int epochs = 20;
  int batch_size = 128;
  int repetitions = 3;
  std::uint64_t global_seed = 0;

  std::string train_path;
  std::string test_path;
  std::string dataset_name;
  int num_classes = 10;

  TrainerConfig trainer;

  double sigma_floor = 1e-6;
  int crop_padding = 4;
  double flip_probability = 0.5;

  void validate() const;
};

struct RunResult {
  SimConfig config;
  // accuracy[rep][node][epoch], test accuracy in [0, 1]
  std::vector<std::vector<std::vector<double>>> accuracy;
  // node -> server bytes observed by the wire tap, one entry per repetition
  std::vector<std::uint64_t> wire_bytes_per_rep;
  double wall_seconds = 0.0;
};

// Fired once per training batch, after augmentation and before the gradient
// step. Invocations are serialized; `images` is only valid inside the call.
struct BatchEvent {
  int rep = 0;
  int node = 0;
  int epoch = 0;
  int batch = 0;
  bool statmix_applied = false;
  StatsKey target_key{};   // meaningful only when statmix_applied
  ImageStats target{};     // meaningful only when statmix_applied
  const std::vector<Image>* images = nullptr;
};
using BatchObserver = std::function<void(const BatchEvent&)>;

// Runs the whole protocol: per repetition, a fresh seeded partition, then
// publish/distribute through the wire layer, then the per-node epoch/batch
// loop with the per-batch mixing gate. Nodes share statistics and nothing
// else. Nodes may run on up to n_workers threads; results are identical to
// the serial schedule.
RunResult run_experiment(const SimConfig& cfg, const Dataset& train, const Dataset& test,
                         int n_workers = 1, const BatchObserver& observer = {});

// CSV with "# key=value" config-echo comment lines, then
// rep,node,epoch,test_accuracy rows. Deterministic byte-for-byte for a given
// config (wall-clock is deliberately not included).
void write_run_csv(const RunResult& result, std::ostream& out);
void write_run_csv(const RunResult& result, const std::string& path);
RunResult read_run_csv(const std::string& path);

}  // namespace statmix
