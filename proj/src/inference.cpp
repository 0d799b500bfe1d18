#include "stratmine/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "file_io.hpp"
#include "stratmine/error.hpp"
#include "stratmine/parallel.hpp"
#include "text_format.hpp"

namespace stratmine {

using json = nlohmann::ordered_json;
using smtl::Formula;
using smtl::Interval;
using smtl::Rate;

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::ConditionAction:
      return "condition_action";
    case TemplateKind::ActionGoal:
      return "action_goal";
    case TemplateKind::FeatureRelevance:
      return "feature_relevance";
  }
  return "?";
}

Formula Literal::formula() const {
  Formula a = Formula::atom(column);
  return negated ? Formula::negation(a) : a;
}

CandidateTactic condition_action(const Literal& condition, const std::string& action, std::uint32_t duration,
                                 Rate rate) {
  CandidateTactic c;
  c.kind = TemplateKind::ConditionAction;
  c.literal = condition;
  c.action = action;
  c.duration = duration;
  c.rate = rate;
  const Formula hold = Formula::globally(Formula::atom(action), Interval{0, duration}, rate);
  c.formula = Formula::future(Formula::conjunction(condition.formula(), Formula::next(hold)));
  c.text = smtl::render(c.formula);
  return c;
}

CandidateTactic action_goal(const Literal& goal, const std::string& action, Rate rate) {
  CandidateTactic c;
  c.kind = TemplateKind::ActionGoal;
  c.literal = goal;
  c.action = action;
  c.rate = rate;
  const Formula g = goal.formula();
  const Formula lhs = Formula::conjunction(Formula::atom(action), Formula::negation(g));
  c.formula = Formula::future(Formula::until(lhs, g, Interval{1, 1000}, rate));
  c.text = smtl::render(c.formula);
  return c;
}

CandidateTactic feature_relevance(const Literal& feature) {
  CandidateTactic c;
  c.kind = TemplateKind::FeatureRelevance;
  c.literal = feature;
  c.formula = Formula::future(feature.formula());
  c.text = smtl::render(c.formula);
  return c;
}

double kl_bernoulli(double p, double q, double epsilon) {
  if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("rates must lie in [0, 1]");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 0.5)");
  const double pc = std::clamp(p, epsilon, 1.0 - epsilon);
  const double qc = std::clamp(q, epsilon, 1.0 - epsilon);
  if (pc == qc) return 0.0;
  const double d = pc * std::log(pc / qc) + (1.0 - pc) * std::log((1.0 - pc) / (1.0 - qc));
  return std::max(0.0, d);
}

double gated_score(double p, double q, double epsilon) {
  const double d = kl_bernoulli(p, q, epsilon);
  return p < q ? 0.0 : d;
}

ScoredCandidate score_candidate(const CandidateTactic& candidate, const TraceSet& agent, const TraceSet& random,
                                double epsilon) {
  ScoredCandidate s;
  s.candidate = candidate;
  s.p = smtl::satisfaction_rate_set(candidate.formula, agent);
  s.q = smtl::satisfaction_rate_set(candidate.formula, random);
  s.score = gated_score(s.p, s.q, epsilon);
  return s;
}

SearchGrid SearchGrid::defaults() {
  SearchGrid g;
  g.durations = {0, 2, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 150, 200};
  for (const char* r : {"0.7", "0.8", "0.9", "1.0"}) g.rates.push_back(Rate::parse(r));
  return g;
}

std::vector<CandidateTactic> generate_candidates(const FeatureSchema& schema, const SearchGrid& grid) {
  if (grid.durations.empty() || grid.rates.empty()) throw std::invalid_argument("search grids must not be empty");
  const auto conditions = schema.columns_with_role(FeatureRole::Condition);
  const auto actions = schema.columns_with_role(FeatureRole::Action);
  if (conditions.empty()) throw std::invalid_argument("schema has no condition features");
  if (actions.empty()) throw std::invalid_argument("schema has no action features");

  std::vector<Literal> literals;
  for (std::size_t c : conditions) {
    literals.push_back({schema.columns()[c], false});
    literals.push_back({schema.columns()[c], true});
  }
  std::vector<CandidateTactic> out;
  out.reserve(literals.size() * (1 + actions.size() * grid.rates.size() * (1 + grid.durations.size())));
  for (const Literal& lit : literals) {
    out.push_back(feature_relevance(lit));
    for (std::size_t a : actions) {
      const std::string& action = schema.columns()[a];
      for (Rate r : grid.rates) {
        out.push_back(action_goal(lit, action, r));
        for (std::uint32_t d : grid.durations) out.push_back(condition_action(lit, action, d, r));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CandidateTactic& a, const CandidateTactic& b) { return a.text < b.text; });
  return out;
}

std::vector<std::uint32_t> SatisfactionMatrix::counts(std::span<const std::size_t> traces) const {
  std::vector<std::uint32_t> c(candidates, 0);
  for (std::size_t t : traces) {
    const auto& words = rows.at(t).words();
    for (std::size_t w = 0; w < words.size(); ++w) {
      std::uint64_t bits = words[w];
      while (bits != 0) {
        ++c[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))];
        bits &= bits - 1;
      }
    }
  }
  return c;
}

std::vector<std::uint32_t> SatisfactionMatrix::counts() const {
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  return counts(all);
}

CandidateScorer::CandidateScorer(const FeatureSchema& schema, std::span<const CandidateTactic> candidates)
    : schema_(schema), dag_(schema_) {
  roots_.reserve(candidates.size());
  for (const CandidateTactic& c : candidates) roots_.push_back(dag_.add(c.formula));
}

SatisfactionMatrix CandidateScorer::satisfaction(const TraceSet& traces, unsigned threads) const {
  if (!(traces.schema == schema_)) throw DataError("trace schema differs from the candidate schema");
  SatisfactionMatrix m;
  m.candidates = roots_.size();
  m.rows.resize(traces.size());
  const std::size_t n = traces.size();
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  const std::size_t chunk = (n + workers - 1) / workers;
  parallel_for(workers, static_cast<unsigned>(workers), [&](std::size_t w) {
    std::vector<smtl::BitSignal> scratch;
    for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) {
      dag_.evaluate(traces.traces[i], scratch);
      smtl::BitSignal row(roots_.size());
      for (std::size_t c = 0; c < roots_.size(); ++c) {
        if (scratch[roots_[c]].get(0)) row.set(c, true);
      }
      m.rows[i] = std::move(row);
    }
  });
  return m;
}

std::optional<ScoredCandidate> best_tactic(const ClusterReport& report, TemplateKind kind, const Literal& literal,
                                           double floor) {
  const ScoredCandidate* best = nullptr;
  for (const ScoredCandidate& s : report.scored) {
    if (s.candidate.kind != kind || s.candidate.literal != literal || !(s.score > floor)) continue;
    if (best == nullptr || s.score > best->score ||
        (s.score == best->score && s.candidate.text < best->candidate.text)) {
      best = &s;
    }
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

StrategyReport infer_strategy_report(const std::vector<TraceSet>& clusters, const TraceSet& random,
                                     const InferenceParams& params) {
  if (clusters.empty()) throw std::invalid_argument("no clusters to report on");
  if (random.empty()) throw std::invalid_argument("random trace set is empty");
  for (const TraceSet& c : clusters) {
    if (c.empty()) throw std::invalid_argument("empty cluster");
    if (!(c.schema == random.schema)) throw DataError("cluster schema differs from the random schema");
  }
  if (!(params.epsilon > 0.0 && params.epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 0.5)");

  const auto candidates = generate_candidates(random.schema, params.grid);
  const CandidateScorer scorer(random.schema, candidates);
  const auto random_counts = scorer.satisfaction(random, params.threads).counts();
  const double random_n = static_cast<double>(random.size());

  StrategyReport report;
  report.epsilon = params.epsilon;
  report.top_k = params.top_k;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const TraceSet& cluster = clusters[ci];
    const auto counts = scorer.satisfaction(cluster, params.threads).counts();
    ClusterReport cr;
    cr.cluster = ci;
    cr.size = cluster.size();
    cr.scored.reserve(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      ScoredCandidate s;
      s.candidate = candidates[k];
      s.p = static_cast<double>(counts[k]) / static_cast<double>(cluster.size());
      s.q = static_cast<double>(random_counts[k]) / random_n;
      s.score = gated_score(s.p, s.q, params.epsilon);
      cr.scored.push_back(std::move(s));
    }

    std::vector<std::size_t> relevance;
    for (std::size_t k = 0; k < cr.scored.size(); ++k) {
      if (cr.scored[k].candidate.kind == TemplateKind::FeatureRelevance) relevance.push_back(k);
    }
    std::stable_sort(relevance.begin(), relevance.end(),
                     [&](std::size_t a, std::size_t b) { return cr.scored[a].score > cr.scored[b].score; });
    relevance.resize(std::min(relevance.size(), params.top_k));
    for (std::size_t k : relevance) {
      FeatureTactics ft;
      ft.feature = cr.scored[k];
      const Literal& lit = ft.feature.candidate.literal;
      ft.action_goal = best_tactic(cr, TemplateKind::ActionGoal, lit, params.score_floor);
      ft.condition_action = best_tactic(cr, TemplateKind::ConditionAction, lit, params.score_floor);
      cr.features.push_back(std::move(ft));
    }
    report.clusters.push_back(std::move(cr));
  }
  return report;
}

namespace {

json tactic_json(const std::optional<ScoredCandidate>& s, bool with_duration) {
  if (!s) return nullptr;
  json j;
  j["action"] = s->candidate.action;
  if (with_duration) j["d"] = s->candidate.duration;
  j["r"] = s->candidate.rate ? s->candidate.rate->value() : 1.0;
  j["p"] = s->p;
  j["q"] = s->q;
  j["dkl"] = s->score;
  j["formula"] = s->candidate.text;
  return j;
}

}  // namespace

void write_report_json(std::ostream& out, const StrategyReport& report) {
  json doc;
  doc["epsilon"] = report.epsilon;
  doc["top_k"] = report.top_k;
  json clusters = json::array();
  for (const ClusterReport& cr : report.clusters) {
    json entries = json::array();
    for (const FeatureTactics& ft : cr.features) {
      json e;
      e["feature"] = ft.feature.candidate.literal.render();
      e["p"] = ft.feature.p;
      e["q"] = ft.feature.q;
      e["dkl"] = ft.feature.score;
      e["action_goal"] = tactic_json(ft.action_goal, false);
      e["condition_action"] = tactic_json(ft.condition_action, true);
      entries.push_back(std::move(e));
    }
    clusters.push_back({{"cluster", cr.cluster}, {"size", cr.size}, {"entries", std::move(entries)}});
  }
  doc["clusters"] = std::move(clusters);
  out << doc.dump(1) << '\n';
}

void save_report_json(const std::filesystem::path& path, const StrategyReport& report) {
  auto out = detail::open_for_write(path);
  write_report_json(out, report);
}

void write_candidates_csv(std::ostream& out, const StrategyReport& report, double floor) {
  out << "cluster,formula,template,literal,action,d,r,p,q,score\n";
  for (const ClusterReport& cr : report.clusters) {
    for (const ScoredCandidate& s : cr.scored) {
      if (!(s.score > floor)) continue;
      const CandidateTactic& c = s.candidate;
      out << cr.cluster << ',' << detail::csv_field(c.text) << ',' << to_string(c.kind) << ','
          << detail::csv_field(c.literal.render()) << ',' << c.action << ',';
      if (c.kind == TemplateKind::ConditionAction) out << c.duration;
      out << ',';
      if (c.rate) out << c.rate->render();
      out << ',' << detail::shortest(s.p) << ',' << detail::shortest(s.q) << ',' << detail::shortest(s.score)
          << '\n';
    }
  }
}

}  // namespace stratmine
