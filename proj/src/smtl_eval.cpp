#include <algorithm>
#include <bit>
#include <deque>
#include <limits>
#include <stdexcept>

#include "stratmine/error.hpp"
#include "stratmine/smtl.hpp"

namespace stratmine::smtl {

BitSignal::BitSignal(std::size_t length, bool value)
    : size_(length), words_((length + 63) / 64, value ? ~std::uint64_t{0} : 0) {
  trim();
}

void BitSignal::assign(std::size_t length, bool value) {
  size_ = length;
  words_.assign((length + 63) / 64, value ? ~std::uint64_t{0} : 0);
  trim();
}

bool BitSignal::any() const {
  return std::any_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w != 0; });
}

std::size_t BitSignal::count() const {
  std::size_t c = 0;
  for (std::uint64_t w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

void BitSignal::trim() {
  if (size_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
}

namespace {

constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

// suffix[t] = number of true steps in [t, n).
std::vector<std::int64_t> suffix_counts(const BitSignal& s) {
  const std::size_t n = s.size();
  std::vector<std::int64_t> suffix(n + 1, 0);
  for (std::size_t t = n; t-- > 0;) suffix[t] = suffix[t + 1] + (s.get(t) ? 1 : 0);
  return suffix;
}

std::size_t window_hi(std::size_t t, const std::optional<Interval>& iv, std::size_t n) {
  if (!iv) return n - 1;
  return std::min<std::size_t>(t + iv->hi, n - 1);
}

std::size_t window_lo(std::size_t t, const std::optional<Interval>& iv) { return iv ? t + iv->lo : t; }

// F without interval: true up to the last witness.
void eventually_unbounded(const BitSignal& a, BitSignal& out) {
  const auto& src = a.words();
  auto& dst = out.words();
  std::size_t i = src.size();
  while (i > 0 && src[i - 1] == 0) dst[--i] = 0;
  if (i == 0) return;
  --i;
  const int top = 63 - std::countl_zero(src[i]);
  dst[i] = top == 63 ? ~std::uint64_t{0} : (std::uint64_t{1} << (top + 1)) - 1;
  while (i > 0) dst[--i] = ~std::uint64_t{0};
}

void eventually(const BitSignal& a, const std::optional<Interval>& iv, BitSignal& out) {
  if (!iv) {
    eventually_unbounded(a, out);
    return;
  }
  const std::size_t n = a.size();
  const auto suffix = suffix_counts(a);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = window_lo(t, iv);
    if (lo >= n) continue;
    const std::size_t hi = window_hi(t, iv, n);
    if (suffix[lo] - suffix[hi + 1] > 0) out.set(t, true);
  }
}

void globally(const BitSignal& a, const std::optional<Interval>& iv, const std::optional<Rate>& rate,
              BitSignal& out) {
  const std::size_t n = a.size();
  const Rate r = rate.value_or(Rate::one());
  const auto suffix = suffix_counts(a);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = window_lo(t, iv);
    if (lo >= n) {
      out.set(t, true);
      continue;
    }
    const std::size_t hi = window_hi(t, iv, n);
    const auto len = static_cast<std::int64_t>(hi - lo + 1);
    if (r.satisfied_by(suffix[lo] - suffix[hi + 1], len)) out.set(t, true);
  }
}

// U at t holds iff some witness t' in the window has b(t') and
//   D * (S[t] - S[t']) >= m * (t' - t),  i.e.  key(t') <= key(t)
// with key(x) = D * S[x] + m * x. The minimum key over the sliding witness
// window is kept in a monotonic deque while t runs backwards.
void until(const BitSignal& a, const BitSignal& b, const std::optional<Interval>& iv,
           const std::optional<Rate>& rate, BitSignal& out) {
  const std::size_t n = a.size();
  const std::int64_t m = rate.value_or(Rate::one()).millionths();
  const auto suffix = suffix_counts(a);
  auto key = [&](std::size_t x) {
    return Rate::kDenominator * suffix[x] + m * static_cast<std::int64_t>(x);
  };
  const std::size_t lo_off = iv ? iv->lo : 0;
  const std::size_t hi_off = iv ? iv->hi : kUnbounded;

  std::deque<std::size_t> window;  // front: newest (smallest index); back: minimum key
  for (std::size_t t = n; t-- > 0;) {
    const std::size_t x = t + lo_off;
    if (x < n && b.get(x)) {
      const std::int64_t kx = key(x);
      while (!window.empty() && key(window.front()) >= kx) window.pop_front();
      window.push_front(x);
    }
    if (hi_off != kUnbounded) {
      while (!window.empty() && window.back() - t > hi_off) window.pop_back();
    }
    if (!window.empty() && key(window.back()) <= key(t)) out.set(t, true);
  }
}

}  // namespace

FormulaDag::FormulaDag(const FeatureSchema& schema) : schema_(&schema) {}

std::size_t FormulaDag::intern(const DagNode& n, const Formula& source) {
  Key key{static_cast<int>(n.op), n.column, n.lhs, n.rhs, n.interval, n.rate};
  auto [it, inserted] = index_.try_emplace(key, nodes_.size());
  if (inserted) {
    nodes_.push_back(n);
    sources_.push_back(source);
  }
  return it->second;
}

std::size_t FormulaDag::add(const Formula& f) {
  DagNode n;
  n.op = f.op();
  n.interval = f.interval();
  n.rate = f.rate();
  switch (f.op()) {
    case Op::True:
    case Op::False:
      break;
    case Op::Atom: {
      auto col = schema_->column_index(f.atom_name());
      if (!col) throw DataError("unknown atom '" + f.atom_name() + "'");
      n.column = *col;
      break;
    }
    case Op::Not:
    case Op::Next:
    case Op::Future:
    case Op::Globally:
      n.lhs = add(f.lhs());
      break;
    case Op::And:
    case Op::Or:
    case Op::Implies:
    case Op::Until:
      n.lhs = add(f.lhs());
      n.rhs = add(f.rhs());
      break;
  }
  return intern(n, f);
}

std::string FormulaDag::render_node(std::size_t id) const { return render(sources_.at(id)); }

void FormulaDag::evaluate(const Trace& trace, std::vector<BitSignal>& out) const {
  const std::size_t n = trace.length();
  if (n == 0) throw std::invalid_argument("cannot evaluate an empty trace");
  out.resize(nodes_.size());
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const DagNode& node = nodes_[id];
    BitSignal& dst = out[id];
    dst.assign(n, node.op == Op::True);
    auto& w = dst.words();
    switch (node.op) {
      case Op::True:
      case Op::False:
        break;
      case Op::Atom:
        for (std::size_t t = 0; t < n; ++t) {
          if (trace.steps[t][node.column] != 0) dst.set(t, true);
        }
        break;
      case Op::Not: {
        const auto& a = out[node.lhs].words();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = ~a[i];
        dst.trim();
        break;
      }
      case Op::And:
      case Op::Or:
      case Op::Implies: {
        const auto& a = out[node.lhs].words();
        const auto& b = out[node.rhs].words();
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] = node.op == Op::And ? (a[i] & b[i]) : node.op == Op::Or ? (a[i] | b[i]) : (~a[i] | b[i]);
        }
        dst.trim();
        break;
      }
      case Op::Next: {
        const auto& a = out[node.lhs].words();
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] = (a[i] >> 1) | (i + 1 < a.size() ? a[i + 1] << 63 : 0);
        }
        dst.trim();
        break;
      }
      case Op::Future:
        eventually(out[node.lhs], node.interval, dst);
        break;
      case Op::Globally:
        globally(out[node.lhs], node.interval, node.rate, dst);
        break;
      case Op::Until:
        until(out[node.lhs], out[node.rhs], node.interval, node.rate, dst);
        break;
    }
  }
}

SatisfactionTable evaluate(const Formula& f, const Trace& trace, const FeatureSchema& schema) {
  FormulaDag dag(schema);
  dag.add(f);
  std::vector<BitSignal> signals;
  dag.evaluate(trace, signals);
  SatisfactionTable table;
  table.subformulas.reserve(dag.size());
  table.values.reserve(dag.size());
  for (std::size_t id = 0; id < dag.size(); ++id) {
    table.subformulas.push_back(dag.render_node(id));
    std::vector<std::uint8_t> row(trace.length());
    for (std::size_t t = 0; t < row.size(); ++t) row[t] = signals[id].get(t) ? 1 : 0;
    table.values.push_back(std::move(row));
  }
  return table;
}

bool satisfies(const Formula& f, const Trace& trace, const FeatureSchema& schema) {
  FormulaDag dag(schema);
  const std::size_t root = dag.add(f);
  std::vector<BitSignal> signals;
  dag.evaluate(trace, signals);
  return signals[root].get(0);
}

double satisfaction_rate_set(const Formula& f, const TraceSet& traces) {
  if (traces.empty()) throw std::invalid_argument("satisfaction rate of an empty trace set");
  FormulaDag dag(traces.schema);
  const std::size_t root = dag.add(f);
  std::vector<BitSignal> signals;
  std::size_t hits = 0;
  for (const Trace& trace : traces.traces) {
    dag.evaluate(trace, signals);
    if (signals[root].get(0)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(traces.size());
}

}  // namespace stratmine::smtl
