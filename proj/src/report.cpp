#include "stratmine/report.hpp"

#include <ostream>
#include <stdexcept>

#include "file_io.hpp"
#include "text_format.hpp"

namespace stratmine {

namespace {

using detail::fixed;
using detail::shortest;

void require_content(const StrategyReport& report) {
  if (report.clusters.empty()) throw std::invalid_argument("strategy report is empty");
}

std::string tactic_label(const ScoredCandidate& s) {
  const CandidateTactic& c = s.candidate;
  std::string label = c.action;
  if (c.kind == TemplateKind::ConditionAction) label += " (d=" + std::to_string(c.duration);
  if (c.rate) label += (c.kind == TemplateKind::ConditionAction ? ", r=" : " (r=") + c.rate->render();
  if (c.kind == TemplateKind::ConditionAction || c.rate) label += ")";
  return label;
}

void markdown_row(std::ostream& out, const char* param, const std::optional<ScoredCandidate>& s,
                  const std::string& text) {
  if (!s) {
    out << "| " << param << " | - | - | - | - |\n";
    return;
  }
  out << "| " << param << " | " << fixed(s->p, 2) << " | " << fixed(s->q, 2) << " | " << fixed(s->score, 2) << " | `"
      << text << "` |\n";
}

void csv_row(std::ostream& out, const ClusterReport& cr, std::size_t rank, const char* param,
             const std::string& feature, const std::optional<ScoredCandidate>& s) {
  out << cr.cluster << ',' << rank << ',' << param << ',' << detail::csv_field(feature) << ',';
  if (!s) {
    out << "-,-,-,-,-,-,-\n";
    return;
  }
  const CandidateTactic& c = s->candidate;
  out << (c.action.empty() ? "-" : c.action) << ',';
  out << (c.kind == TemplateKind::ConditionAction ? std::to_string(c.duration) : "-") << ',';
  out << (c.rate ? c.rate->render() : "-") << ',';
  out << shortest(s->p) << ',' << shortest(s->q) << ',' << shortest(s->score) << ',' << detail::csv_field(c.text)
      << '\n';
}

}  // namespace

void write_report_markdown(std::ostream& out, const StrategyReport& report, const ClusterSummary& summary) {
  require_content(report);
  out << "# Strategy report\n\n";
  out << "Clusters: " << report.clusters.size() << ", top features per cluster: " << report.top_k
      << ", epsilon: " << shortest(report.epsilon) << "\n\n";
  for (const ClusterReport& cr : report.clusters) {
    out << "## Cluster " << cr.cluster << " (" << cr.size << " traces)\n\n";
    out << "| Param | p | q | D_KL | Feature / formula |\n";
    out << "|---|---|---|---|---|\n";
    for (const FeatureTactics& ft : cr.features) {
      markdown_row(out, "f", ft.feature, ft.feature.candidate.literal.render());
      markdown_row(out, "A_G", ft.action_goal, ft.action_goal ? tactic_label(*ft.action_goal) : "");
      markdown_row(out, "A_C", ft.condition_action, ft.condition_action ? tactic_label(*ft.condition_action) : "");
    }
    out << '\n';
  }
  if (!summary.ch_scores.empty()) {
    out << "## Calinski-Harabasz scores\n\n";
    out << "| k | CH | |\n|---|---|---|\n";
    for (const auto& [k, s] : summary.ch_scores) {
      out << "| " << k << " | " << fixed(s, 2) << " | " << (k == summary.k ? "selected" : "") << " |\n";
    }
    out << '\n';
  }
}

void write_report_csv(std::ostream& out, const StrategyReport& report) {
  require_content(report);
  out << "cluster,rank,param,feature,action,d,r,p,q,dkl,formula\n";
  for (const ClusterReport& cr : report.clusters) {
    for (std::size_t i = 0; i < cr.features.size(); ++i) {
      const FeatureTactics& ft = cr.features[i];
      const std::string feature = ft.feature.candidate.literal.render();
      csv_row(out, cr, i + 1, "f", feature, ft.feature);
      csv_row(out, cr, i + 1, "A_G", feature, ft.action_goal);
      csv_row(out, cr, i + 1, "A_C", feature, ft.condition_action);
    }
  }
}

void write_ch_scores_csv(std::ostream& out, const ClusterSummary& summary) {
  out << "k,ch,selected\n";
  for (const auto& [k, s] : summary.ch_scores) out << k << ',' << shortest(s) << ',' << (k == summary.k ? 1 : 0) << '\n';
}

void render_report(const std::filesystem::path& dir, const StrategyReport& report, const ClusterSummary& summary) {
  require_content(report);
  auto md = detail::open_for_write(dir / "report.md");
  write_report_markdown(md, report, summary);
  auto csv = detail::open_for_write(dir / "report.csv");
  write_report_csv(csv, report);
  auto ch = detail::open_for_write(dir / "ch_scores.csv");
  write_ch_scores_csv(ch, summary);
}

}  // namespace stratmine
