#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stratmine/smtl.hpp"
#include "stratmine/trace_model.hpp"

namespace stratmine {

enum class TemplateKind { ConditionAction, ActionGoal, FeatureRelevance };
std::string_view to_string(TemplateKind kind);

/// A schema column or its negation.
struct Literal {
  std::string column;
  bool negated = false;

  smtl::Formula formula() const;
  std::string render() const { return negated ? "!" + column : column; }
  auto operator<=>(const Literal&) const = default;
};

/// One instantiated template.
///   condition-action   F(C & X(G[0:d]{r}(A)))
///   action-goal        F(U[1:1000]{r}(A & !G, G))
///   feature-relevance  F(f)
struct CandidateTactic {
  TemplateKind kind = TemplateKind::FeatureRelevance;
  Literal literal;     // C, G or f
  std::string action;  // empty for feature relevance
  std::uint32_t duration = 0;
  std::optional<smtl::Rate> rate;
  smtl::Formula formula;
  std::string text;
};

CandidateTactic condition_action(const Literal& condition, const std::string& action, std::uint32_t duration,
                                 smtl::Rate rate);
CandidateTactic action_goal(const Literal& goal, const std::string& action, smtl::Rate rate);
CandidateTactic feature_relevance(const Literal& feature);

struct ScoredCandidate {
  CandidateTactic candidate;
  double p = 0.0;
  double q = 0.0;
  double score = 0.0;
};

/// KL(B(p') || B(q')) with p', q' clipped to [epsilon, 1 - epsilon].
/// Throws std::invalid_argument unless p, q in [0, 1] and 0 < epsilon < 0.5.
double kl_bernoulli(double p, double q, double epsilon = 1e-6);

/// 0 when p < q, otherwise kl_bernoulli(p, q, epsilon).
double gated_score(double p, double q, double epsilon = 1e-6);

ScoredCandidate score_candidate(const CandidateTactic& candidate, const TraceSet& agent, const TraceSet& random,
                                double epsilon = 1e-6);

struct SearchGrid {
  std::vector<std::uint32_t> durations;
  std::vector<smtl::Rate> rates;

  static SearchGrid defaults();
};

/// All template instances over the schema, sorted by rendered formula.
/// Conditions and goals range over condition columns and their negations,
/// actions over action columns. Throws std::invalid_argument on empty grids or
/// an empty role.
std::vector<CandidateTactic> generate_candidates(const FeatureSchema& schema, const SearchGrid& grid);

/// Per-trace satisfaction of every candidate, one bit per candidate.
struct SatisfactionMatrix {
  std::size_t candidates = 0;
  std::vector<smtl::BitSignal> rows;  // one per trace

  /// Number of listed traces satisfying each candidate.
  std::vector<std::uint32_t> counts(std::span<const std::size_t> traces) const;
  std::vector<std::uint32_t> counts() const;
};

/// Evaluates a fixed candidate list through one shared formula DAG.
class CandidateScorer {
 public:
  CandidateScorer(const FeatureSchema& schema, std::span<const CandidateTactic> candidates);
  CandidateScorer(const CandidateScorer&) = delete;
  CandidateScorer& operator=(const CandidateScorer&) = delete;

  SatisfactionMatrix satisfaction(const TraceSet& traces, unsigned threads = 1) const;
  std::size_t dag_size() const { return dag_.size(); }

 private:
  FeatureSchema schema_;
  smtl::FormulaDag dag_;
  std::vector<std::size_t> roots_;
};

struct FeatureTactics {
  ScoredCandidate feature;
  std::optional<ScoredCandidate> action_goal;
  std::optional<ScoredCandidate> condition_action;
};

struct ClusterReport {
  std::size_t cluster = 0;
  std::size_t size = 0;
  std::vector<FeatureTactics> features;
  std::vector<ScoredCandidate> scored;  // every candidate, candidate order
};

struct StrategyReport {
  double epsilon = 1e-6;
  std::size_t top_k = 3;
  std::vector<ClusterReport> clusters;
};

struct InferenceParams {
  SearchGrid grid = SearchGrid::defaults();
  double epsilon = 1e-6;
  std::size_t top_k = 3;
  double score_floor = 0.0;  // attached tactics need score > floor
  unsigned threads = 1;
};

/// Best-scoring candidate of a template bound to `literal`; ties go to the
/// lexicographically smallest formula. Only candidates with score > floor
/// qualify.
std::optional<ScoredCandidate> best_tactic(const ClusterReport& report, TemplateKind kind, const Literal& literal,
                                           double floor = 0.0);

/// Scores every candidate per cluster against the random set and keeps the
/// top_k features with their best action-goal and condition-action tactics.
StrategyReport infer_strategy_report(const std::vector<TraceSet>& clusters, const TraceSet& random,
                                     const InferenceParams& params = {});

void write_report_json(std::ostream& out, const StrategyReport& report);
void save_report_json(const std::filesystem::path& path, const StrategyReport& report);

/// cluster,formula,template,literal,action,d,r,p,q,score for candidates with
/// score > floor.
void write_candidates_csv(std::ostream& out, const StrategyReport& report, double floor = 0.0);

}  // namespace stratmine
