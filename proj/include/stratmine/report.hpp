#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "stratmine/inference.hpp"

namespace stratmine {

struct ClusterSummary {
  std::size_t k = 0;
  std::map<std::size_t, double> ch_scores;
};

/// Per-cluster tactic tables with rows f, A_G, A_C and columns p, q, D_KL
/// (two decimals), plus the CH curve. Missing tactics print as "-".
/// Throws std::invalid_argument on an empty report.
void write_report_markdown(std::ostream& out, const StrategyReport& report, const ClusterSummary& summary);

/// Same rows as the Markdown tables at full precision.
void write_report_csv(std::ostream& out, const StrategyReport& report);

void write_ch_scores_csv(std::ostream& out, const ClusterSummary& summary);

/// Writes report.md, report.csv and ch_scores.csv into `dir`.
void render_report(const std::filesystem::path& dir, const StrategyReport& report, const ClusterSummary& summary);

}  // namespace stratmine
