#include "statmix/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace statmix {

namespace {

auto key_tuple(const ReportKey& k) {
  return std::make_tuple(k.n_nodes, k.model, k.standard_da, k.p_statmix);
}

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

MetricsReport aggregate(const std::vector<RunResult>& results, int tail_epochs) {
  if (tail_epochs < 1) throw std::runtime_error("aggregate: tail_epochs must be >= 1");

  std::map<std::tuple<int, std::string, bool, double>, std::pair<ReportKey, std::vector<double>>>
      pools;
  for (const RunResult& r : results) {
    const SimConfig& c = r.config;
    if (c.epochs < tail_epochs) {
      throw std::runtime_error("aggregate: run has " + std::to_string(c.epochs) +
                               " epochs, fewer than tail_epochs=" + std::to_string(tail_epochs));
    }
    ReportKey key{c.n_nodes, model_tag(c.trainer.model), c.standard_da, c.p_statmix};
    auto& pool = pools[key_tuple(key)];
    pool.first = key;
    for (const auto& per_node : r.accuracy) {
      for (const auto& per_epoch : per_node) {
        if (per_epoch.size() < static_cast<std::size_t>(tail_epochs)) {
          throw std::runtime_error("aggregate: accuracy series shorter than tail_epochs");
        }
        for (std::size_t e = per_epoch.size() - static_cast<std::size_t>(tail_epochs);
             e < per_epoch.size(); ++e) {
          pool.second.push_back(per_epoch[e]);
        }
      }
    }
  }

  MetricsReport report;
  report.tail_epochs = tail_epochs;
  for (const auto& [tup, pool] : pools) {
    const std::vector<double>& samples = pool.second;
    ReportRow row;
    row.key = pool.first;
    row.samples = samples.size();
    double sum = 0.0;
    for (const double v : samples) sum += v;
    row.mean = sum / static_cast<double>(samples.size());
    double sq = 0.0;
    for (const double v : samples) sq += (v - row.mean) * (v - row.mean);
    row.stddev = std::sqrt(sq / static_cast<double>(samples.size()));
    report.rows.push_back(std::move(row));
  }

  // diff vs. the matched p=0 row with identical (n_nodes, model, standard_da)
  for (ReportRow& row : report.rows) {
    if (row.key.p_statmix == 0.0) continue;
    const auto baseline =
        pools.find(key_tuple(ReportKey{row.key.n_nodes, row.key.model, row.key.standard_da, 0.0}));
    if (baseline == pools.end()) {
      report.warnings.push_back("no p_statmix=0 counterpart for (n_nodes=" +
                                std::to_string(row.key.n_nodes) + ", model=" + row.key.model +
                                ", standard_da=" + (row.key.standard_da ? "1" : "0") +
                                "); diff omitted");
      continue;
    }
    const std::vector<double>& base_samples = baseline->second.second;
    double base_sum = 0.0;
    for (const double v : base_samples) base_sum += v;
    const double base_mean = base_sum / static_cast<double>(base_samples.size());
    if (base_mean == 0.0) {
      report.warnings.push_back("p_statmix=0 mean is zero; diff omitted");
      continue;
    }
    row.diff_percent = 100.0 * (row.mean / base_mean - 1.0);
  }
  return report;
}

void write_report_csv(const MetricsReport& report, std::ostream& out) {
  out << "n_nodes,model,standard_da,p_statmix,mean,std,diff_percent,samples\n";
  for (const ReportRow& row : report.rows) {
    out << row.key.n_nodes << "," << row.key.model << "," << (row.key.standard_da ? 1 : 0) << ","
        << fmt(row.key.p_statmix, "%.17g") << "," << fmt(row.mean, "%.6f") << ","
        << fmt(row.stddev, "%.6f") << ",";
    if (row.diff_percent) out << fmt(*row.diff_percent, "%.4f");
    out << "," << row.samples << "\n";
  }
}

void write_plot_data(const MetricsReport& report, bool standard_da, std::ostream& out) {
  std::vector<const ReportRow*> rows;
  for (const ReportRow& row : report.rows) {
    if (row.key.standard_da == standard_da) rows.push_back(&row);
  }
  std::sort(rows.begin(), rows.end(), [](const ReportRow* a, const ReportRow* b) {
    return a->key.p_statmix < b->key.p_statmix;
  });
  for (const ReportRow* row : rows) {
    out << fmt(row->key.p_statmix, "%.6g") << " " << fmt(row->mean, "%.6f") << "\n";
  }
}

}  // namespace statmix
