#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "statmix/orchestrator.hpp"
#include "statmix/partition.hpp"
#include "statmix/synthetic.hpp"

using namespace statmix;

namespace {

Dataset small_train(int classes, int per_class, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.num_classes = classes;
  spec.per_class = per_class;
  spec.width = 8;
  spec.height = 8;
  spec.seed = seed;
  return make_synthetic_dataset(spec);
}

SimConfig base_config(int classes) {
  SimConfig cfg;
  cfg.n_nodes = 1;
  cfg.p_statmix = 0.0;
  cfg.standard_da = false;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.repetitions = 1;
  cfg.global_seed = 11;
  cfg.num_classes = classes;
  cfg.dataset_name = "unit";
  cfg.trainer.model = ModelKind::kLinearSoftmax;
  return cfg;
}

using BatchTag = std::tuple<int, int, int, int>;  // rep, node, epoch, batch

std::vector<Eigen::VectorXd> flatten_all(const std::vector<Image>& images) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(images.size());
  for (const Image& img : images) out.push_back(flatten(img));
  return out;
}

// Independent replication of the training stream with the mixing stage
// absent: partition, canonical gather, per-epoch shuffle, batching, and
// standard DA, all re-derived from the documented stream layout.
std::map<BatchTag, std::vector<Eigen::VectorXd>> replicate_stream_without_mixing(
    const SimConfig& cfg, const Dataset& train) {
  std::map<BatchTag, std::vector<Eigen::VectorXd>> out;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const NodePartition part = stratified_split(
        train, cfg.n_nodes, derive_stream(cfg.global_seed, {static_cast<std::uint64_t>(rep)}));
    for (int node = 0; node < cfg.n_nodes; ++node) {
      std::vector<Image> images;
      for (const std::uint32_t id : part.per_node_ids[static_cast<std::size_t>(node)]) {
        images.push_back(train.images[id]);
      }
      const std::size_t K = images.size();
      for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::uint32_t> order(K);
        std::iota(order.begin(), order.end(), 0u);
        RandomStream shuffle_rng = derive_stream(
            cfg.global_seed,
            {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(node),
             static_cast<std::uint64_t>(epoch), 0, static_cast<std::uint64_t>(StreamPurpose::kShuffle)});
        shuffle_rng.shuffle(order);
        const std::size_t B = static_cast<std::size_t>(cfg.batch_size);
        const std::size_t n_batches = (K + B - 1) / B;
        for (std::size_t b = 0; b < n_batches; ++b) {
          std::vector<Image> batch;
          for (std::size_t j = b * B; j < std::min((b + 1) * B, K); ++j) {
            batch.push_back(images[order[j]]);
          }
          if (cfg.standard_da) {
            RandomStream crop_rng = derive_stream(
                cfg.global_seed,
                {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(node),
                 static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(b),
                 static_cast<std::uint64_t>(StreamPurpose::kCrop)});
            RandomStream flip_rng = derive_stream(
                cfg.global_seed,
                {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(node),
                 static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(b),
                 static_cast<std::uint64_t>(StreamPurpose::kFlip)});
            for (Image& img : batch) {
              img = random_crop(img, cfg.crop_padding, crop_rng);
              img = random_hflip(img, cfg.flip_probability, flip_rng);
            }
          }
          out[BatchTag{rep, node, epoch, static_cast<int>(b)}] = flatten_all(batch);
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("orchestrator") {

TEST_CASE("K=10, B=3 yields batches of 3,3,3,1") {
  const Dataset train = small_train(2, 5, 3);  // N=1 -> K=10
  const Dataset test = small_train(2, 4, 4);
  SimConfig cfg = base_config(2);
  cfg.batch_size = 3;
  cfg.epochs = 1;

  std::vector<std::size_t> sizes;
  run_experiment(cfg, train, test, 1, [&](const BatchEvent& ev) {
    REQUIRE(ev.images != nullptr);
    sizes.push_back(ev.images->size());
    CHECK(ev.batch == static_cast<int>(sizes.size()) - 1);
  });
  CHECK(sizes == std::vector<std::size_t>{3, 3, 3, 1});
}

TEST_CASE("p=0 training stream is pixel-identical to a pipeline without the mixing stage") {
  const Dataset train = small_train(2, 6, 5);
  const Dataset test = small_train(2, 3, 6);
  SimConfig cfg = base_config(2);
  cfg.n_nodes = 2;
  cfg.p_statmix = 0.0;
  cfg.standard_da = true;
  cfg.crop_padding = 2;
  cfg.epochs = 2;
  cfg.repetitions = 2;
  cfg.batch_size = 3;

  std::map<BatchTag, std::vector<Eigen::VectorXd>> observed;
  run_experiment(cfg, train, test, 1, [&](const BatchEvent& ev) {
    CHECK_FALSE(ev.statmix_applied);
    observed[BatchTag{ev.rep, ev.node, ev.epoch, ev.batch}] = flatten_all(*ev.images);
  });

  const auto expected = replicate_stream_without_mixing(cfg, train);
  REQUIRE(observed.size() == expected.size());
  for (const auto& [tag, batch] : expected) {
    REQUIRE(observed.count(tag) == 1);
    const auto& got = observed.at(tag);
    REQUIRE(got.size() == batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      CHECK(got[i] == batch[i]);  // exact, coefficient-wise
    }
  }
}

TEST_CASE("p=1 mixes every batch toward the selected target") {
  const Dataset train = small_train(2, 8, 7);
  const Dataset test = small_train(2, 3, 8);
  SimConfig cfg = base_config(2);
  cfg.n_nodes = 2;
  cfg.p_statmix = 1.0;
  cfg.epochs = 2;
  cfg.batch_size = 4;

  int batches = 0;
  run_experiment(cfg, train, test, 1, [&](const BatchEvent& ev) {
    ++batches;
    REQUIRE(ev.statmix_applied);
    CHECK(ev.target_key.node_id < 2);
    for (const Image& img : *ev.images) {
      const ImageStats got = compute_stats(img);
      for (int c = 0; c < 3; ++c) {
        if (ev.target.stddev(c) > cfg.sigma_floor) {
          CHECK(std::abs(got.mean(c) - ev.target.mean(c)) <= 1e-9);
          CHECK(std::abs(got.stddev(c) - ev.target.stddev(c)) <= 1e-9);
        }
      }
    }
  });
  CHECK(batches == 8);  // 1 rep x 2 nodes x 2 epochs x (8 images / batch 4)
}

TEST_CASE("serial and parallel schedules give bit-identical results") {
  const Dataset train = small_train(3, 12, 9);
  const Dataset test = small_train(3, 4, 10);
  SimConfig cfg = base_config(3);
  cfg.n_nodes = 3;
  cfg.p_statmix = 0.5;
  cfg.standard_da = true;
  cfg.epochs = 3;
  cfg.repetitions = 2;
  cfg.batch_size = 4;

  const RunResult serial = run_experiment(cfg, train, test, 1);
  const RunResult parallel = run_experiment(cfg, train, test, 8);
  CHECK(serial.accuracy == parallel.accuracy);
  CHECK(serial.wire_bytes_per_rep == parallel.wire_bytes_per_rep);

  std::ostringstream a, b;
  write_run_csv(serial, a);
  write_run_csv(parallel, b);
  CHECK(a.str() == b.str());
}

TEST_CASE("gate fires at the configured rate") {
  const Dataset train = small_train(2, 20, 13);  // N=1 -> K=40
  const Dataset test = small_train(2, 4, 14);
  SimConfig cfg = base_config(2);
  cfg.p_statmix = 0.3;
  cfg.batch_size = 4;   // 10 batches per epoch
  cfg.epochs = 25;
  cfg.repetitions = 4;  // 1000 batches total

  long total = 0, mixed = 0;
  run_experiment(cfg, train, test, 1, [&](const BatchEvent& ev) {
    ++total;
    if (ev.statmix_applied) ++mixed;
  });
  CHECK(total == 1000);
  const auto [lo, hi] = oracle::binomial_band_99(total, cfg.p_statmix);
  CHECK(mixed >= lo);
  CHECK(mixed <= hi);
}

TEST_CASE("wire traffic is one 16-byte header plus 32 bytes per image per node, epoch-independent") {
  const Dataset train = small_train(2, 10, 15);  // N=2 -> K=10
  const Dataset test = small_train(2, 3, 16);
  SimConfig cfg = base_config(2);
  cfg.n_nodes = 2;

  for (const int epochs : {1, 3}) {
    cfg.epochs = epochs;
    const RunResult result = run_experiment(cfg, train, test, 1);
    REQUIRE(result.wire_bytes_per_rep.size() == 1);
    CHECK(result.wire_bytes_per_rep[0] == 2 * (16 + 10 * 32));
  }
}

TEST_CASE("run CSV round trips through write and read") {
  const Dataset train = small_train(2, 6, 17);
  const Dataset test = small_train(2, 3, 18);
  SimConfig cfg = base_config(2);
  cfg.n_nodes = 2;
  cfg.p_statmix = 0.25;
  cfg.standard_da = true;
  cfg.repetitions = 2;
  const RunResult result = run_experiment(cfg, train, test, 1);

  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "statmix_run_test.csv").string();
  write_run_csv(result, path);
  const RunResult back = read_run_csv(path);
  CHECK(back.accuracy == result.accuracy);
  CHECK(back.wire_bytes_per_rep == result.wire_bytes_per_rep);
  CHECK(back.config.n_nodes == cfg.n_nodes);
  CHECK(back.config.p_statmix == cfg.p_statmix);
  CHECK(back.config.standard_da == cfg.standard_da);
  CHECK(back.config.epochs == cfg.epochs);
  CHECK(back.config.repetitions == cfg.repetitions);
  CHECK(back.config.global_seed == cfg.global_seed);
  CHECK(model_tag(back.config.trainer.model) == model_tag(cfg.trainer.model));
  std::remove(path.c_str());
}

TEST_CASE("accuracy tensor has reps x nodes x epochs entries in [0, 1]") {
  const Dataset train = small_train(2, 8, 19);
  const Dataset test = small_train(2, 4, 20);
  SimConfig cfg = base_config(2);
  cfg.n_nodes = 2;
  cfg.epochs = 3;
  cfg.repetitions = 2;
  const RunResult result = run_experiment(cfg, train, test, 1);
  REQUIRE(result.accuracy.size() == 2);
  for (const auto& per_node : result.accuracy) {
    REQUIRE(per_node.size() == 2);
    for (const auto& per_epoch : per_node) {
      REQUIRE(per_epoch.size() == 3);
      for (const double acc : per_epoch) {
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
      }
    }
  }
  CHECK(result.wall_seconds > 0.0);
}

TEST_CASE("a failing node aborts the run with its id") {
  const Dataset train = small_train(2, 4, 21);
  const Dataset test = small_train(2, 3, 22);
  SimConfig cfg = base_config(2);
  cfg.trainer.lr0 = 1e308;  // forces a non-finite update within a few steps
  cfg.epochs = 5;
  CHECK_THROWS_WITH_AS(run_experiment(cfg, train, test, 1), doctest::Contains("node 0"),
                       std::runtime_error);
}

TEST_CASE("config validation rejects out-of-range fields") {
  SimConfig cfg = base_config(2);
  cfg.p_statmix = -0.1;
  CHECK_THROWS(cfg.validate());
  cfg = base_config(2);
  cfg.batch_size = 0;
  CHECK_THROWS(cfg.validate());
  cfg = base_config(2);
  cfg.repetitions = 0;
  CHECK_THROWS(cfg.validate());
  cfg = base_config(2);
  cfg.n_nodes = 0;
  CHECK_THROWS(cfg.validate());
}

}  // TEST_SUITE
