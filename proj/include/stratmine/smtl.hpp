#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "stratmine/trace_model.hpp"

namespace stratmine::smtl {

/// Timestep offsets [lo, hi] relative to the evaluation step.
struct Interval {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  auto operator<=>(const Interval&) const = default;
};

/// Satisfaction-rate threshold in (0, 1], held exactly in millionths so that
/// `count / length >= r` is decided with integer arithmetic.
class Rate {
 public:
  static constexpr std::int64_t kDenominator = 1'000'000;

  constexpr Rate() = default;
  /// Parses a decimal literal with at most six fractional digits.
  static Rate parse(std::string_view text);
  /// Nearest millionth; throws std::invalid_argument outside (0, 1].
  static Rate from_double(double value);
  static constexpr Rate one() { return Rate(kDenominator); }

  std::int64_t millionths() const { return millionths_; }
  double value() const { return static_cast<double>(millionths_) / kDenominator; }
  bool is_one() const { return millionths_ == kDenominator; }
  /// count / length >= rate; an empty window (length 0) is vacuously satisfied.
  bool satisfied_by(std::int64_t count, std::int64_t length) const {
    return count * kDenominator >= millionths_ * length;
  }
  /// Shortest decimal with at least one fractional digit, e.g. "0.7", "1.0".
  std::string render() const;

  auto operator<=>(const Rate&) const = default;

 private:
  constexpr explicit Rate(std::int64_t millionths) : millionths_(millionths) {}
  std::int64_t millionths_ = kDenominator;
};

enum class Op { True, False, Atom, Not, And, Or, Implies, Next, Future, Globally, Until };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::True;
  std::string atom;
  NodePtr lhs;
  NodePtr rhs;
  std::optional<Interval> interval;
  std::optional<Rate> rate;
};

/// Immutable SMTL formula; copies share structure.
class Formula {
 public:
  Formula();  // true

  static Formula constant(bool value);
  static Formula atom(std::string name);
  static Formula negation(Formula f);
  static Formula conjunction(Formula a, Formula b);
  static Formula disjunction(Formula a, Formula b);
  static Formula implication(Formula a, Formula b);
  static Formula next(Formula f);
  static Formula future(Formula f, std::optional<Interval> interval = std::nullopt);
  static Formula globally(Formula f, std::optional<Interval> interval = std::nullopt,
                          std::optional<Rate> rate = std::nullopt);
  static Formula until(Formula a, Formula b, std::optional<Interval> interval = std::nullopt,
                       std::optional<Rate> rate = std::nullopt);

  Op op() const { return node_->op; }
  const std::string& atom_name() const { return node_->atom; }
  Formula lhs() const { return Formula(node_->lhs); }
  Formula rhs() const { return Formula(node_->rhs); }
  const std::optional<Interval>& interval() const { return node_->interval; }
  const std::optional<Rate>& rate() const { return node_->rate; }
  int arity() const;
  const Node& node() const { return *node_; }

  /// Structural equality.
  bool operator==(const Formula& other) const;

 private:
  explicit Formula(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;
};

/// Parses the concrete syntax: atoms `name` or `name=label`, `true`, `false`,
/// `!`, `&`, `|`, `->`, and the temporal forms `X(f)`, `F[a:b](f)`,
/// `G[a:b]{r}(f)`, `U[a:b]{r}(f1, f2)` with optional decorations.
/// Throws FormulaSyntaxError.
Formula parse_formula(std::string_view text);

/// Canonical text with minimal parentheses; parse(render(f)) == f.
std::string render(const Formula& f);

// ---------------------------------------------------------------------------
// Evaluation

/// Packed boolean time series.
class BitSignal {
 public:
  BitSignal() = default;
  explicit BitSignal(std::size_t length, bool value = false);

  /// Resizes to `length` and fills with `value`, reusing storage.
  void assign(std::size_t length, bool value);
  std::size_t size() const { return size_; }
  bool get(std::size_t t) const { return (words_[t >> 6] >> (t & 63)) & 1U; }
  void set(std::size_t t, bool v) {
    const std::uint64_t bit = std::uint64_t{1} << (t & 63);
    if (v) {
      words_[t >> 6] |= bit;
    } else {
      words_[t >> 6] &= ~bit;
    }
  }
  bool any() const;
  std::size_t count() const;
  std::vector<std::uint64_t>& words() { return words_; }
  const std::vector<std::uint64_t>& words() const { return words_; }
  /// Clears padding bits past size().
  void trim();

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Hash-consed formula DAG bound to a schema. Structurally equal subformulas
/// share one node, so a batch of candidates evaluates each shared subformula
/// once per trace. Nodes are stored in topological (children-first) order.
class FormulaDag {
 public:
  explicit FormulaDag(const FeatureSchema& schema);

  /// Adds f and returns the id of its root. Throws DataError on unknown atoms.
  std::size_t add(const Formula& f);
  std::size_t size() const { return nodes_.size(); }
  std::string render_node(std::size_t id) const;

  /// Fills out[id] with the satisfaction signal of every node over `trace`.
  void evaluate(const Trace& trace, std::vector<BitSignal>& out) const;

 private:
  struct DagNode {
    Op op = Op::True;
    std::size_t column = 0;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    std::optional<Interval> interval;
    std::optional<Rate> rate;
  };
  using Key = std::tuple<int, std::size_t, std::size_t, std::size_t, std::optional<Interval>,
                         std::optional<Rate>>;

  std::size_t intern(const DagNode& n, const Formula& source);

  const FeatureSchema* schema_;
  std::vector<DagNode> nodes_;
  std::vector<Formula> sources_;
  std::map<Key, std::size_t> index_;
};

/// Per-subformula, per-timestep satisfaction values (children before parents).
struct SatisfactionTable {
  std::vector<std::string> subformulas;
  std::vector<std::vector<std::uint8_t>> values;

  const std::vector<std::uint8_t>& root() const { return values.back(); }
  /// Whole-trace satisfaction: the root's value at t = 0.
  bool holds() const { return !values.empty() && !values.back().empty() && values.back()[0] != 0; }
  std::size_t length() const { return values.empty() ? 0 : values.back().size(); }
};

SatisfactionTable evaluate(const Formula& f, const Trace& trace, const FeatureSchema& schema);

/// tau |- f, i.e. satisfaction at t = 0.
bool satisfies(const Formula& f, const Trace& trace, const FeatureSchema& schema);

/// Fraction of traces in the set satisfying f. Throws std::invalid_argument on
/// an empty set.
double satisfaction_rate_set(const Formula& f, const TraceSet& traces);

}  // namespace stratmine::smtl
