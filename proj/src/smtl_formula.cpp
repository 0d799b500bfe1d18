#include <cctype>
#include <cmath>
#include <stdexcept>

#include "stratmine/smtl.hpp"

namespace stratmine::smtl {

Rate Rate::parse(std::string_view text) {
  std::size_t i = 0;
  std::int64_t whole = 0;
  std::size_t whole_digits = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    whole = whole * 10 + (text[i] - '0');
    if (whole > 1) throw std::invalid_argument("rate must lie in (0, 1]");
    ++i;
    ++whole_digits;
  }
  std::int64_t frac = 0;
  std::size_t frac_digits = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (frac_digits == 6) throw std::invalid_argument("rate has more than six fractional digits");
      frac = frac * 10 + (text[i] - '0');
      ++frac_digits;
      ++i;
    }
  }
  if (i != text.size() || (whole_digits == 0 && frac_digits == 0))
    throw std::invalid_argument("malformed rate '" + std::string(text) + "'");
  for (std::size_t k = frac_digits; k < 6; ++k) frac *= 10;
  const std::int64_t millionths = whole * kDenominator + frac;
  if (millionths <= 0 || millionths > kDenominator) throw std::invalid_argument("rate must lie in (0, 1]");
  return Rate(millionths);
}

Rate Rate::from_double(double value) {
  if (!(value > 0.0 && value <= 1.0)) throw std::invalid_argument("rate must lie in (0, 1]");
  const auto m = static_cast<std::int64_t>(std::llround(value * kDenominator));
  if (m <= 0) throw std::invalid_argument("rate rounds to zero");
  return Rate(m);
}

std::string Rate::render() const {
  std::string out = std::to_string(millionths_ / kDenominator);
  std::int64_t frac = millionths_ % kDenominator;
  std::string digits = std::to_string(frac);
  digits.insert(0, 6 - digits.size(), '0');
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  return out + "." + digits;
}

namespace {

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

void check_interval(const std::optional<Interval>& interval) {
  if (interval && interval->lo > interval->hi)
    throw std::invalid_argument("interval lower bound exceeds upper bound");
}

bool equal(const Node* a, const Node* b) {
  if (a == b) return true;
  if (a == nullptr || b == nullptr) return false;
  return a->op == b->op && a->atom == b->atom && a->interval == b->interval && a->rate == b->rate &&
         equal(a->lhs.get(), b->lhs.get()) && equal(a->rhs.get(), b->rhs.get());
}

}  // namespace

Formula::Formula() : node_(make(Op::True)) {}

Formula Formula::constant(bool value) { return Formula(make(value ? Op::True : Op::False)); }

Formula Formula::atom(std::string name) {
  if (name.empty()) throw std::invalid_argument("atom name must not be empty");
  auto n = std::make_shared<Node>();
  n->op = Op::Atom;
  n->atom = std::move(name);
  return Formula(std::move(n));
}

Formula Formula::negation(Formula f) { return Formula(make(Op::Not, std::move(f.node_))); }

Formula Formula::conjunction(Formula a, Formula b) {
  return Formula(make(Op::And, std::move(a.node_), std::move(b.node_)));
}

Formula Formula::disjunction(Formula a, Formula b) {
  return Formula(make(Op::Or, std::move(a.node_), std::move(b.node_)));
}

Formula Formula::implication(Formula a, Formula b) {
  return Formula(make(Op::Implies, std::move(a.node_), std::move(b.node_)));
}

Formula Formula::next(Formula f) { return Formula(make(Op::Next, std::move(f.node_))); }

Formula Formula::future(Formula f, std::optional<Interval> interval) {
  check_interval(interval);
  auto n = std::make_shared<Node>();
  n->op = Op::Future;
  n->lhs = std::move(f.node_);
  n->interval = interval;
  return Formula(std::move(n));
}

Formula Formula::globally(Formula f, std::optional<Interval> interval, std::optional<Rate> rate) {
  check_interval(interval);
  auto n = std::make_shared<Node>();
  n->op = Op::Globally;
  n->lhs = std::move(f.node_);
  n->interval = interval;
  n->rate = rate;
  return Formula(std::move(n));
}

Formula Formula::until(Formula a, Formula b, std::optional<Interval> interval,
                       std::optional<Rate> rate) {
  check_interval(interval);
  auto n = std::make_shared<Node>();
  n->op = Op::Until;
  n->lhs = std::move(a.node_);
  n->rhs = std::move(b.node_);
  n->interval = interval;
  n->rate = rate;
  return Formula(std::move(n));
}

int Formula::arity() const {
  switch (node_->op) {
    case Op::True:
    case Op::False:
    case Op::Atom:
      return 0;
    case Op::Not:
    case Op::Next:
    case Op::Future:
    case Op::Globally:
      return 1;
    case Op::And:
    case Op::Or:
    case Op::Implies:
    case Op::Until:
      return 2;
  }
  return 0;
}

bool Formula::operator==(const Formula& other) const { return equal(node_.get(), other.node_.get()); }

}  // namespace stratmine::smtl
