// Command-line front end: dataset ingestion, partitioning, statistics
// exchange, augmentation previews, simulation runs, probability sweeps, and
// report generation.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "statmix/cifar.hpp"
#include "statmix/exchange.hpp"
#include "statmix/orchestrator.hpp"
#include "statmix/partition.hpp"
#include "statmix/report.hpp"
#include "statmix/rng.hpp"
#include "statmix/synthetic.hpp"

namespace fs = std::filesystem;
using namespace statmix;

namespace {

struct DatasetArgs {
  std::string path;
  int num_classes = 10;
  int label_bytes = 0;  // 0 = infer from num_classes
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--dataset", args.path, "CIFAR-format binary file")->required();
  cmd->add_option("--num-classes", args.num_classes, "number of classes in the dataset");
  cmd->add_option("--label-bytes", args.label_bytes,
                  "label bytes per record (1 or 2; 0 infers from --num-classes)");
}

Dataset load(const DatasetArgs& args) {
  return load_cifar_binary(args.path, args.num_classes, args.label_bytes);
}

std::vector<std::vector<Image>> gather_node_images(const Dataset& ds, const NodePartition& part) {
  std::vector<std::vector<Image>> node_images(static_cast<std::size_t>(part.n_nodes));
  for (int i = 0; i < part.n_nodes; ++i) {
    for (const std::uint32_t id : part.per_node_ids[static_cast<std::size_t>(i)]) {
      node_images[static_cast<std::size_t>(i)].push_back(ds.images[id]);
    }
  }
  return node_images;
}

std::vector<int> parse_index_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

// "a:b:s" inclusive grid or a plain comma list.
std::vector<double> parse_p_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double start = 0.0, stop = 0.0, step = 0.0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0.0) {
      throw std::runtime_error("invalid --p-grid '" + text + "' (want start:stop:step)");
    }
    const int count = static_cast<int>(std::floor((stop - start) / step + 0.5)) + 1;
    for (int i = 0; i < count; ++i) out.push_back(start + i * step);
  } else {
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) out.push_back(std::stod(tok));
    }
  }
  if (out.empty()) throw std::runtime_error("empty --p-grid");
  for (const double p : out) {
    if (p < 0.0 || p > 1.0) throw std::runtime_error("--p-grid value outside [0, 1]");
  }
  return out;
}

struct SimArgs {
  SimConfig cfg;
  std::string model_tag = "linear";
  int workers = 1;
  std::string config_path;
};

// Flat key=value config file; keys are the long option names (either - or _
// separated). Command-line flags keep precedence: only options not given on
// the command line take values from the file.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const std::size_t eq = line.find('=', start);
    if (eq == std::string::npos) {
      throw std::runtime_error("config file " + path + " line " + std::to_string(line_no) +
                               ": expected key=value, got '" + line + "'");
    }
    std::string key = line.substr(start, eq - start);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value = line.substr(eq + 1);
    const std::size_t vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    while (!value.empty() && (value.back() == ' ' || value.back() == '\t' || value.back() == '\r')) {
      value.pop_back();
    }

    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw std::runtime_error("config file " + path + " line " + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;  // the command line wins
    opt->add_result(value);
    opt->run_callback();
  }
}

void add_sim_options(CLI::App* cmd, SimArgs& args, bool with_p) {
  cmd->add_option("--config", args.config_path,
                  "flat key=value config file; command-line flags override it");
  cmd->add_option("--dataset", args.cfg.train_path, "training set (CIFAR-format binary)");
  cmd->add_option("--test-dataset", args.cfg.test_path, "test set (CIFAR-format binary)");
  cmd->add_option("--num-classes", args.cfg.num_classes, "number of classes");
  cmd->add_option("--dataset-name", args.cfg.dataset_name, "name echoed into result files");
  cmd->add_option("--n-nodes", args.cfg.n_nodes, "number of federated nodes");
  if (with_p) cmd->add_option("--p-statmix", args.cfg.p_statmix, "per-batch mixing probability");
  cmd->add_flag("--standard-da", args.cfg.standard_da, "enable random crop + horizontal flip");
  cmd->add_option("--epochs", args.cfg.epochs, "training epochs per node");
  cmd->add_option("--batch-size", args.cfg.batch_size, "training batch size");
  cmd->add_option("--reps", args.cfg.repetitions, "experiment repetitions");
  cmd->add_option("--seed", args.cfg.global_seed, "global 64-bit seed");
  cmd->add_option("--model", args.model_tag, "classifier: linear or mlp");
  cmd->add_option("--hidden-units", args.cfg.trainer.hidden_units, "hidden units (mlp only)");
  cmd->add_option("--lr0", args.cfg.trainer.lr0, "initial learning rate");
  cmd->add_option("--momentum", args.cfg.trainer.momentum, "SGD momentum coefficient");
  cmd->add_option("--sigma-floor", args.cfg.sigma_floor, "divisor floor for constant channels");
  cmd->add_option("--crop-padding", args.cfg.crop_padding, "crop padding in pixels");
  cmd->add_option("--flip-probability", args.cfg.flip_probability, "horizontal flip probability");
  cmd->add_option("--workers", args.workers, "max concurrent node workers (results are identical)");
}

void finalize_sim_args(CLI::App* cmd, SimArgs& args) {
  if (!args.config_path.empty()) apply_config_file(cmd, args.config_path);
  if (args.cfg.train_path.empty()) throw std::runtime_error("--dataset is required");
  if (args.cfg.test_path.empty()) throw std::runtime_error("--test-dataset is required");
  args.cfg.trainer.model = model_kind_from_tag(args.model_tag);
  if (args.cfg.dataset_name.empty()) {
    args.cfg.dataset_name = fs::path(args.cfg.train_path).filename().string();
  }
}

RunResult run_one(const SimArgs& args, const Dataset& train, const Dataset& test) {
  RunResult result = run_experiment(args.cfg, train, test, args.workers);
  std::uint64_t wire_total = 0;
  for (const std::uint64_t b : result.wire_bytes_per_rep) wire_total += b;
  std::cout << "n_nodes=" << args.cfg.n_nodes << " p_statmix=" << args.cfg.p_statmix
            << " reps=" << args.cfg.repetitions << " epochs=" << args.cfg.epochs
            << " wire_bytes=" << wire_total << " wall_s=" << result.wall_seconds << "\n";
  return result;
}

void write_report_files(const MetricsReport& report, const std::string& out_path,
                        const std::string& plot_prefix) {
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + out_path);
  write_report_csv(report, out);
  if (!plot_prefix.empty()) {
    for (const bool da : {false, true}) {
      bool any = false;
      for (const auto& row : report.rows) any = any || row.key.standard_da == da;
      if (!any) continue;
      std::ofstream plot(plot_prefix + (da ? "_da1.dat" : "_da0.dat"));
      if (!plot) throw std::runtime_error("cannot open plot file for writing");
      write_plot_data(report, da, plot);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated image-statistics exchange and mixing-augmentation simulator"};
  app.require_subcommand(1);

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "load a CIFAR-format binary file and summarize it");
  DatasetArgs ingest_ds;
  std::string ingest_ppm_dir;
  std::string ingest_roundtrip;
  int ingest_limit = 16;
  add_dataset_options(ingest, ingest_ds);
  ingest->add_option("--export-ppm", ingest_ppm_dir, "write P3 portable pixmaps into this directory");
  ingest->add_option("--limit", ingest_limit, "max images to export");
  ingest->add_option("--roundtrip", ingest_roundtrip, "re-serialize records to this path");
  ingest->callback([&] {
    const Dataset ds = load(ingest_ds);
    ds.validate();
    std::cout << "images=" << ds.images.size();
    if (!ds.images.empty()) {
      std::cout << " width=" << ds.images.front().width() << " height=" << ds.images.front().height()
                << " channels=" << Image::kChannels;
    }
    std::cout << "\n";
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
      std::cout << "class " << c << ": " << counts[c] << "\n";
    }
    if (!ingest_ppm_dir.empty()) {
      fs::create_directories(ingest_ppm_dir);
      const std::size_t n = std::min<std::size_t>(ds.images.size(), static_cast<std::size_t>(ingest_limit));
      for (std::size_t i = 0; i < n; ++i) {
        write_ppm(ds.images[i], (fs::path(ingest_ppm_dir) / ("image_" + std::to_string(i) + ".ppm")).string());
      }
      std::cout << "wrote " << n << " ppm files to " << ingest_ppm_dir << "\n";
    }
    if (!ingest_roundtrip.empty()) {
      save_cifar_binary(ds, ingest_roundtrip);
      std::cout << "re-serialized records to " << ingest_roundtrip << "\n";
    }
  });

  // ---- partition ----
  auto* partition_cmd = app.add_subcommand("partition", "stratified split into node subsets");
  DatasetArgs part_ds;
  int part_nodes = 5;
  std::uint64_t part_seed = 0;
  std::string part_out = "partition.tsv";
  add_dataset_options(partition_cmd, part_ds);
  partition_cmd->add_option("--n-nodes", part_nodes, "number of nodes")->required();
  partition_cmd->add_option("--seed", part_seed, "partition seed");
  partition_cmd->add_option("--out", part_out, "manifest output path");
  partition_cmd->callback([&] {
    const Dataset ds = load(part_ds);
    // Matches the repetition-0 partition of `simulate` with the same seed.
    const NodePartition part = stratified_split(ds, part_nodes, derive_stream(part_seed, {0}));
    write_partition_manifest(part, part_seed, part_out);
    std::cout << "wrote " << part_out << "\n";
    for (int i = 0; i < part.n_nodes; ++i) {
      std::cout << "node " << i << ": " << part.per_node_ids[static_cast<std::size_t>(i)].size()
                << " images\n";
    }
  });

  // ---- stats ----
  auto* stats_cmd = app.add_subcommand("stats", "compute per-image channel statistics and dump them");
  DatasetArgs stats_ds;
  std::string stats_partition;
  std::string stats_out = "stats.bin";
  add_dataset_options(stats_cmd, stats_ds);
  stats_cmd->add_option("--partition", stats_partition,
                        "partition manifest; node/image ids follow it (default: one node)");
  stats_cmd->add_option("--out", stats_out, "registry dump output path");
  stats_cmd->callback([&] {
    const Dataset ds = load(stats_ds);
    std::vector<std::vector<Image>> node_images;
    if (stats_partition.empty()) {
      node_images.push_back(ds.images);
    } else {
      node_images = gather_node_images(ds, read_partition_manifest(stats_partition));
    }
    std::vector<StatsEntry> all;
    std::vector<std::uint32_t> counts;
    for (std::size_t i = 0; i < node_images.size(); ++i) {
      const auto entries = publish_node_stats(static_cast<std::uint32_t>(i), node_images[i]);
      all.insert(all.end(), entries.begin(), entries.end());
      counts.push_back(static_cast<std::uint32_t>(entries.size()));
    }
    const StatsRegistry registry(static_cast<int>(node_images.size()), counts, std::move(all));
    write_registry_dump(registry, stats_out);
    std::cout << "wrote " << registry.size() << " statistics sets to " << stats_out << "\n";
  });

  // ---- distribute ----
  auto* dist_cmd = app.add_subcommand(
      "distribute", "run the publish/distribute exchange and dump per-node registries");
  DatasetArgs dist_ds;
  std::string dist_partition;
  std::string dist_out_dir = ".";
  add_dataset_options(dist_cmd, dist_ds);
  dist_cmd->add_option("--partition", dist_partition, "partition manifest")->required();
  dist_cmd->add_option("--out-dir", dist_out_dir, "directory for registry_node_<i>.bin dumps");
  dist_cmd->callback([&] {
    const Dataset ds = load(dist_ds);
    const auto node_images = gather_node_images(ds, read_partition_manifest(dist_partition));
    std::vector<std::vector<StatsEntry>> published(node_images.size());
    for (std::size_t i = 0; i < node_images.size(); ++i) {
      published[i] = publish_node_stats(static_cast<std::uint32_t>(i), node_images[i]);
    }
    WireTap tap;
    const auto registries = server_distribute(published, &tap);
    fs::create_directories(dist_out_dir);
    for (std::size_t i = 0; i < registries.size(); ++i) {
      write_registry_dump(registries[i],
                          (fs::path(dist_out_dir) / ("registry_node_" + std::to_string(i) + ".bin")).string());
    }
    std::cout << "nodes=" << registries.size() << " entries_per_registry="
              << (registries.empty() ? 0 : registries.front().size())
              << " wire_bytes=" << tap.bytes << " wire_messages=" << tap.messages << "\n";
  });

  // ---- augment-preview ----
  auto* prev_cmd = app.add_subcommand("augment-preview",
                                      "export original and mixed images for visual inspection");
  DatasetArgs prev_ds;
  std::string prev_indices = "0,1,2,3";
  int prev_target_index = -1;
  std::vector<double> prev_target_stats;
  double prev_sigma_floor = 1e-6;
  std::string prev_out_dir = "preview";
  add_dataset_options(prev_cmd, prev_ds);
  prev_cmd->add_option("--indices", prev_indices, "comma-separated image indices to augment");
  prev_cmd->add_option("--target-index", prev_target_index,
                       "take target statistics from this image");
  prev_cmd->add_option("--target-stats", prev_target_stats,
                       "explicit target: mu0 mu1 mu2 sigma0 sigma1 sigma2")
      ->expected(6);
  prev_cmd->add_option("--sigma-floor", prev_sigma_floor, "divisor floor");
  prev_cmd->add_option("--out-dir", prev_out_dir, "output directory");
  prev_cmd->callback([&] {
    const Dataset ds = load(prev_ds);
    ImageStats target;
    if (!prev_target_stats.empty()) {
      for (int c = 0; c < 3; ++c) {
        target.mean(c) = prev_target_stats[static_cast<std::size_t>(c)];
        target.stddev(c) = prev_target_stats[static_cast<std::size_t>(c) + 3];
      }
    } else if (prev_target_index >= 0) {
      target = compute_stats(ds.images.at(static_cast<std::size_t>(prev_target_index)));
    } else {
      throw std::runtime_error("augment-preview needs --target-index or --target-stats");
    }
    fs::create_directories(prev_out_dir);
    std::vector<Image> batch;
    std::vector<int> indices = parse_index_list(prev_indices);
    for (const int i : indices) batch.push_back(ds.images.at(static_cast<std::size_t>(i)));
    const std::vector<Image> mixed = statmix_batch(batch, target, prev_sigma_floor);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const std::string tag = std::to_string(indices[j]);
      write_ppm(batch[j], (fs::path(prev_out_dir) / ("original_" + tag + ".ppm")).string());
      write_ppm(mixed[j], (fs::path(prev_out_dir) / ("augmented_" + tag + ".ppm")).string());
    }
    std::cout << "wrote " << 2 * batch.size() << " ppm files to " << prev_out_dir << "\n";
  });

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "run the full experiment and write a result CSV");
  SimArgs sim_args;
  std::string sim_out = "run.csv";
  add_sim_options(sim_cmd, sim_args, /*with_p=*/true);
  sim_cmd->add_option("--out", sim_out, "result CSV path");
  sim_cmd->callback([&] {
    finalize_sim_args(sim_cmd, sim_args);
    const Dataset train = load_cifar_binary(sim_args.cfg.train_path, sim_args.cfg.num_classes);
    const Dataset test = load_cifar_binary(sim_args.cfg.test_path, sim_args.cfg.num_classes);
    const RunResult result = run_one(sim_args, train, test);
    write_run_csv(result, sim_out);
    std::cout << "wrote " << sim_out << "\n";
  });

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "run simulate across a grid of mixing probabilities");
  SimArgs sweep_args;
  std::string sweep_grid = "0:1:0.1";
  std::string sweep_out_dir = "sweep";
  int sweep_tail = 10;
  add_sim_options(sweep_cmd, sweep_args, /*with_p=*/false);
  sweep_cmd->add_option("--p-grid", sweep_grid, "start:stop:step or comma list of probabilities");
  sweep_cmd->add_option("--out-dir", sweep_out_dir, "directory for run CSVs, report, and plot data");
  sweep_cmd->add_option("--tail-epochs", sweep_tail, "epochs pooled by the report");
  sweep_cmd->callback([&] {
    finalize_sim_args(sweep_cmd, sweep_args);
    const std::vector<double> grid = parse_p_grid(sweep_grid);
    const Dataset train = load_cifar_binary(sweep_args.cfg.train_path, sweep_args.cfg.num_classes);
    const Dataset test = load_cifar_binary(sweep_args.cfg.test_path, sweep_args.cfg.num_classes);
    fs::create_directories(sweep_out_dir);
    std::vector<RunResult> results;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      SimArgs one = sweep_args;
      one.cfg.p_statmix = grid[i];
      results.push_back(run_one(one, train, test));
      char name[32];
      std::snprintf(name, sizeof(name), "run_%02zu.csv", i);
      write_run_csv(results.back(), (fs::path(sweep_out_dir) / name).string());
    }
    const MetricsReport report = aggregate(results, sweep_tail);
    write_report_files(report, (fs::path(sweep_out_dir) / "report.csv").string(),
                       (fs::path(sweep_out_dir) / "plot").string());
    std::cout << "wrote " << grid.size() << " runs and report to " << sweep_out_dir << "\n";
  });

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "aggregate run CSVs into a metrics report");
  std::vector<std::string> report_inputs;
  std::string report_input_dir;
  int report_tail = 10;
  std::string report_out = "report.csv";
  std::string report_plot_prefix;
  report_cmd->add_option("--inputs", report_inputs, "run CSV files");
  report_cmd->add_option("--input-dir", report_input_dir, "directory scanned for *.csv run files");
  report_cmd->add_option("--tail-epochs", report_tail, "epochs pooled per run");
  report_cmd->add_option("--out", report_out, "report CSV path");
  report_cmd->add_option("--plot-prefix", report_plot_prefix,
                         "write <prefix>_da0.dat / <prefix>_da1.dat accuracy-vs-p data");
  report_cmd->callback([&] {
    std::vector<std::string> paths = report_inputs;
    if (!report_input_dir.empty()) {
      for (const auto& entry : fs::directory_iterator(report_input_dir)) {
        if (entry.path().extension() == ".csv" && entry.path().filename().string().rfind("report", 0) != 0) {
          paths.push_back(entry.path().string());
        }
      }
      std::sort(paths.begin(), paths.end());
    }
    if (paths.empty()) throw std::runtime_error("report: no input CSVs given");
    std::vector<RunResult> results;
    for (const std::string& p : paths) results.push_back(read_run_csv(p));
    const MetricsReport report = aggregate(results, report_tail);
    write_report_files(report, report_out, report_plot_prefix);
    std::cout << "wrote " << report_out << " (" << report.rows.size() << " rows)\n";
  });

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic CIFAR-format dataset");
  SyntheticSpec synth_spec;
  std::string synth_out = "train.bin";
  std::string synth_test_out;
  int synth_test_per_class = 0;
  synth_cmd->add_option("--classes", synth_spec.num_classes, "number of classes");
  synth_cmd->add_option("--per-class", synth_spec.per_class, "training images per class");
  synth_cmd->add_option("--seed", synth_spec.seed, "generator seed");
  synth_cmd->add_option("--out", synth_out, "training set output path");
  synth_cmd->add_option("--test-per-class", synth_test_per_class,
                        "also write a test set with this many images per class");
  synth_cmd->add_option("--test-out", synth_test_out, "test set output path");
  synth_cmd->callback([&] {
    synth_spec.width = kCifarSide;
    synth_spec.height = kCifarSide;
    save_cifar_binary(make_synthetic_dataset(synth_spec), synth_out);
    std::cout << "wrote " << synth_out << "\n";
    if (synth_test_per_class > 0) {
      if (synth_test_out.empty()) throw std::runtime_error("--test-per-class needs --test-out");
      SyntheticSpec test_spec = synth_spec;
      test_spec.per_class = synth_test_per_class;
      test_spec.seed = synth_spec.seed ^ 0x7E57DA7A5EEDull;  // disjoint from the training draw
      save_cifar_binary(make_synthetic_dataset(test_spec), synth_test_out);
      std::cout << "wrote " << synth_test_out << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
