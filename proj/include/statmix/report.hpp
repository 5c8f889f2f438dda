#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "statmix/orchestrator.hpp"

namespace statmix {

struct ReportKey {
  int n_nodes = 0;
  std::string model;
  bool standard_da = false;
  double p_statmix = 0.0;
};

struct ReportRow {
  ReportKey key;
  double mean = 0.0;
  double stddev = 0.0;  // population form over the pooled samples
  std::optional<double> diff_percent;  // vs. the matched p=0 row; absent without one
  std::size_t samples = 0;
};

struct MetricsReport {
  int tail_epochs = 0;
  std::vector<ReportRow> rows;        // sorted by (n_nodes, model, standard_da, p)
  std::vector<std::string> warnings;  // e.g. missing p=0 counterparts
};

// Pools the last tail_epochs per-epoch accuracies across every repetition and
// node of each (n_nodes, model, standard_da, p_statmix) configuration, then
// takes mean and population std of the pool. diff_percent is
// 100 * (mean(p) / mean(p=0) - 1) against the row with identical
// (n_nodes, model, standard_da). Throws if any input has fewer epochs than
// tail_epochs.
MetricsReport aggregate(const std::vector<RunResult>& results, int tail_epochs);

// CSV: n_nodes,model,standard_da,p_statmix,mean,std,diff_percent,samples.
void write_report_csv(const MetricsReport& report, std::ostream& out);

// Two-column "p mean" lines for one standard_da facet, sorted by p.
void write_plot_data(const MetricsReport& report, bool standard_da, std::ostream& out);

}  // namespace statmix
