#include "statmix/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "statmix/partition.hpp"
#include "statmix/rng.hpp"

namespace statmix {

void SimConfig::validate() const {
  if (n_nodes < 1) throw std::runtime_error("n_nodes must be >= 1");
  if (p_statmix < 0.0 || p_statmix > 1.0) throw std::runtime_error("p_statmix must be in [0, 1]");
  if (epochs < 1) throw std::runtime_error("epochs must be >= 1");
  if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
  if (repetitions < 1) throw std::runtime_error("repetitions must be >= 1");
  if (sigma_floor <= 0.0) throw std::runtime_error("sigma_floor must be positive");
  if (crop_padding < 0) throw std::runtime_error("crop_padding must be non-negative");
  if (flip_probability < 0.0 || flip_probability > 1.0) {
    throw std::runtime_error("flip_probability must be in [0, 1]");
  }
  trainer.validate();
}

namespace {

using U64 = std::uint64_t;

void train_one_node(const SimConfig& cfg, int rep, int node, const std::vector<Image>& images,
                    const StatsRegistry& registry, const EvalMatrix& test, int input_dim,
                    std::vector<double>& accuracy_out, const BatchObserver& observer,
                    std::mutex& observer_mutex) {
  const auto urep = static_cast<U64>(rep);
  const auto unode = static_cast<U64>(node);
  auto purpose = [](StreamPurpose p) { return static_cast<U64>(p); };

  RandomStream init_rng =
      derive_stream(cfg.global_seed, {urep, unode, 0, 0, purpose(StreamPurpose::kInit)});
  Classifier model(cfg.trainer, input_dim, cfg.num_classes, init_rng);

  const std::size_t local_count = images.size();
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t n_batches = (local_count + batch_size - 1) / batch_size;

  std::vector<std::uint32_t> order(local_count);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto uepoch = static_cast<U64>(epoch);
    const double lr = cosine_lr(epoch, cfg.trainer.lr0, cfg.epochs);

    std::iota(order.begin(), order.end(), 0u);
    RandomStream shuffle_rng = derive_stream(
        cfg.global_seed, {urep, unode, uepoch, 0, purpose(StreamPurpose::kShuffle)});
    shuffle_rng.shuffle(order);

    for (std::size_t b = 0; b < n_batches; ++b) {
      const auto ubatch = static_cast<U64>(b);
      const std::size_t begin = b * batch_size;
      const std::size_t end = std::min(begin + batch_size, local_count);
      std::vector<Image> batch;
      batch.reserve(end - begin);
      for (std::size_t j = begin; j < end; ++j) batch.push_back(images[order[j]]);

      // The gate is decided first; the mix itself runs on the post-DA batch.
      RandomStream gate_rng = derive_stream(
          cfg.global_seed, {urep, unode, uepoch, ubatch, purpose(StreamPurpose::kGate)});
      const bool mix = gate_rng.next_double() < cfg.p_statmix;

      if (cfg.standard_da) {
        RandomStream crop_rng = derive_stream(
            cfg.global_seed, {urep, unode, uepoch, ubatch, purpose(StreamPurpose::kCrop)});
        RandomStream flip_rng = derive_stream(
            cfg.global_seed, {urep, unode, uepoch, ubatch, purpose(StreamPurpose::kFlip)});
        for (Image& img : batch) {
          img = random_crop(img, cfg.crop_padding, crop_rng);
          img = random_hflip(img, cfg.flip_probability, flip_rng);
        }
      }

      StatsKey target_key{};
      ImageStats target{};
      if (mix) {
        RandomStream target_rng = derive_stream(
            cfg.global_seed, {urep, unode, uepoch, ubatch, purpose(StreamPurpose::kTarget)});
        const StatsEntry chosen = select_target(registry, target_rng);
        target_key = chosen.first;
        target = chosen.second;
        batch = statmix_batch(batch, target, cfg.sigma_floor);
      }

      if (observer) {
        std::lock_guard<std::mutex> lock(observer_mutex);
        BatchEvent ev;
        ev.rep = rep;
        ev.node = node;
        ev.epoch = epoch;
        ev.batch = static_cast<int>(b);
        ev.statmix_applied = mix;
        ev.target_key = target_key;
        ev.target = target;
        ev.images = &batch;
        observer(ev);
      }

      model.train_batch(make_train_batch(batch), lr);
    }
    model.state().epoch += 1;
    accuracy_out[static_cast<std::size_t>(epoch)] = model.evaluate(test);
  }
}

}  // namespace

RunResult run_experiment(const SimConfig& cfg, const Dataset& train, const Dataset& test,
                         int n_workers, const BatchObserver& observer) {
  cfg.validate();
  train.validate();
  test.validate();
  if (train.images.empty()) throw std::runtime_error("run_experiment: empty training set");
  if (test.images.empty()) throw std::runtime_error("run_experiment: empty test set");

  const auto t_start = std::chrono::steady_clock::now();
  const EvalMatrix test_matrix = make_eval_matrix(test);
  const int input_dim = train.images.front().value_count();

  RunResult result;
  result.config = cfg;
  result.accuracy.assign(
      static_cast<std::size_t>(cfg.repetitions),
      std::vector<std::vector<double>>(static_cast<std::size_t>(cfg.n_nodes),
                                       std::vector<double>(static_cast<std::size_t>(cfg.epochs), 0.0)));
  result.wire_bytes_per_rep.resize(static_cast<std::size_t>(cfg.repetitions), 0);

  std::mutex observer_mutex;

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    // Fresh seeded partition per repetition.
    const NodePartition part =
        stratified_split(train, cfg.n_nodes, derive_stream(cfg.global_seed, {static_cast<U64>(rep)}));

    std::vector<std::vector<Image>> node_images(static_cast<std::size_t>(cfg.n_nodes));
    for (int i = 0; i < cfg.n_nodes; ++i) {
      auto& imgs = node_images[static_cast<std::size_t>(i)];
      imgs.reserve(part.per_node_ids[static_cast<std::size_t>(i)].size());
      for (const std::uint32_t id : part.per_node_ids[static_cast<std::size_t>(i)]) {
        imgs.push_back(train.images[id]);
      }
    }

    std::vector<std::vector<StatsEntry>> published(static_cast<std::size_t>(cfg.n_nodes));
    for (int i = 0; i < cfg.n_nodes; ++i) {
      published[static_cast<std::size_t>(i)] =
          publish_node_stats(static_cast<std::uint32_t>(i), node_images[static_cast<std::size_t>(i)]);
    }
    WireTap tap;
    const std::vector<StatsRegistry> registries = server_distribute(published, &tap);
    result.wire_bytes_per_rep[static_cast<std::size_t>(rep)] = tap.bytes;

    // Nodes are independent after the distribution barrier.
    auto run_node = [&](int i) {
      train_one_node(cfg, rep, i, node_images[static_cast<std::size_t>(i)],
                     registries[static_cast<std::size_t>(i)], test_matrix, input_dim,
                     result.accuracy[static_cast<std::size_t>(rep)][static_cast<std::size_t>(i)],
                     observer, observer_mutex);
    };

    const int workers = std::min(std::max(n_workers, 1), cfg.n_nodes);
    if (workers <= 1) {
      for (int i = 0; i < cfg.n_nodes; ++i) {
        try {
          run_node(i);
        } catch (const std::exception& e) {
          throw std::runtime_error("node " + std::to_string(i) + " failed: " + e.what());
        }
      }
    } else {
      std::atomic<int> next{0};
      std::mutex error_mutex;
      std::string first_error;
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.n_nodes) return;
            try {
              run_node(i);
            } catch (const std::exception& e) {
              std::lock_guard<std::mutex> lock(error_mutex);
              if (first_error.empty()) {
                first_error = "node " + std::to_string(i) + " failed: " + e.what();
              }
            }
          }
        });
      }
      for (auto& t : pool) t.join();
      if (!first_error.empty()) throw std::runtime_error(first_error);
    }
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_run_csv(const RunResult& result, std::ostream& out) {
  const SimConfig& c = result.config;
  out << "# n_nodes=" << c.n_nodes << "\n";
  out << "# p_statmix=" << fmt_double(c.p_statmix) << "\n";
  out << "# standard_da=" << (c.standard_da ? 1 : 0) << "\n";
  out << "# epochs=" << c.epochs << "\n";
  out << "# batch_size=" << c.batch_size << "\n";
  out << "# repetitions=" << c.repetitions << "\n";
  out << "# global_seed=" << c.global_seed << "\n";
  out << "# model=" << model_tag(c.trainer.model) << "\n";
  out << "# hidden_units=" << c.trainer.hidden_units << "\n";
  out << "# lr0=" << fmt_double(c.trainer.lr0) << "\n";
  out << "# momentum=" << fmt_double(c.trainer.momentum) << "\n";
  out << "# init_scale=" << fmt_double(c.trainer.init_scale) << "\n";
  out << "# sigma_floor=" << fmt_double(c.sigma_floor) << "\n";
  out << "# crop_padding=" << c.crop_padding << "\n";
  out << "# flip_probability=" << fmt_double(c.flip_probability) << "\n";
  out << "# num_classes=" << c.num_classes << "\n";
  out << "# dataset=" << c.dataset_name << "\n";
  out << "# train_path=" << c.train_path << "\n";
  out << "# test_path=" << c.test_path << "\n";
  out << "# wire_bytes=";
  for (std::size_t r = 0; r < result.wire_bytes_per_rep.size(); ++r) {
    out << (r ? "," : "") << result.wire_bytes_per_rep[r];
  }
  out << "\n";
  out << "rep,node,epoch,test_accuracy\n";
  for (std::size_t rep = 0; rep < result.accuracy.size(); ++rep) {
    for (std::size_t node = 0; node < result.accuracy[rep].size(); ++node) {
      for (std::size_t epoch = 0; epoch < result.accuracy[rep][node].size(); ++epoch) {
        out << rep << "," << node << "," << epoch << ","
            << fmt_double(result.accuracy[rep][node][epoch]) << "\n";
      }
    }
  }
}

void write_run_csv(const RunResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  write_run_csv(result, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

RunResult read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::map<std::string, std::string> meta;
  std::string line;
  bool header_seen = false;
  struct Row {
    int rep, node, epoch;
    double acc;
  };
  std::vector<Row> rows;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::size_t start = line.find_first_not_of("# ");
      const std::size_t eq = line.find('=', start);
      if (start != std::string::npos && eq != std::string::npos) {
        meta[line.substr(start, eq - start)] = line.substr(eq + 1);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "rep,node,epoch,test_accuracy") {
        throw std::runtime_error("run CSV '" + path + "': unexpected header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    Row r{};
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &r.rep, &r.node, &r.epoch, &r.acc) != 4) {
      throw std::runtime_error("run CSV '" + path + "': malformed row '" + line + "'");
    }
    rows.push_back(r);
  }
  if (!header_seen) throw std::runtime_error("run CSV '" + path + "': missing header");

  RunResult result;
  SimConfig& c = result.config;
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = meta.find(key);
    if (it == meta.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = get("n_nodes")) c.n_nodes = std::stoi(*v);
  if (auto v = get("p_statmix")) c.p_statmix = std::stod(*v);
  if (auto v = get("standard_da")) c.standard_da = (*v == "1" || *v == "true");
  if (auto v = get("epochs")) c.epochs = std::stoi(*v);
  if (auto v = get("batch_size")) c.batch_size = std::stoi(*v);
  if (auto v = get("repetitions")) c.repetitions = std::stoi(*v);
  if (auto v = get("global_seed")) c.global_seed = std::stoull(*v);
  if (auto v = get("model")) c.trainer.model = model_kind_from_tag(*v);
  if (auto v = get("hidden_units")) c.trainer.hidden_units = std::stoi(*v);
  if (auto v = get("lr0")) c.trainer.lr0 = std::stod(*v);
  if (auto v = get("momentum")) c.trainer.momentum = std::stod(*v);
  if (auto v = get("init_scale")) c.trainer.init_scale = std::stod(*v);
  if (auto v = get("sigma_floor")) c.sigma_floor = std::stod(*v);
  if (auto v = get("crop_padding")) c.crop_padding = std::stoi(*v);
  if (auto v = get("flip_probability")) c.flip_probability = std::stod(*v);
  if (auto v = get("num_classes")) c.num_classes = std::stoi(*v);
  if (auto v = get("dataset")) c.dataset_name = *v;
  if (auto v = get("train_path")) c.train_path = *v;
  if (auto v = get("test_path")) c.test_path = *v;
  if (auto v = get("wire_bytes"); v && !v->empty()) {
    std::istringstream ws(*v);
    std::string tok;
    while (std::getline(ws, tok, ',')) result.wire_bytes_per_rep.push_back(std::stoull(tok));
  }

  int max_rep = -1, max_node = -1, max_epoch = -1;
  for (const Row& r : rows) {
    max_rep = std::max(max_rep, r.rep);
    max_node = std::max(max_node, r.node);
    max_epoch = std::max(max_epoch, r.epoch);
  }
  result.accuracy.assign(static_cast<std::size_t>(max_rep + 1),
                         std::vector<std::vector<double>>(
                             static_cast<std::size_t>(max_node + 1),
                             std::vector<double>(static_cast<std::size_t>(max_epoch + 1),
                                                 std::numeric_limits<double>::quiet_NaN())));
  for (const Row& r : rows) {
    result.accuracy[static_cast<std::size_t>(r.rep)][static_cast<std::size_t>(r.node)]
                   [static_cast<std::size_t>(r.epoch)] = r.acc;
  }
  for (const auto& per_rep : result.accuracy) {
    for (const auto& per_node : per_rep) {
      for (const double a : per_node) {
        if (std::isnan(a)) {
          throw std::runtime_error("run CSV '" + path + "': missing (rep, node, epoch) rows");
        }
      }
    }
  }
  return result;
}

}  // namespace statmix
