#include <cctype>
#include <charconv>
#include <limits>
#include <stdexcept>

#include "stratmine/error.hpp"
#include "stratmine/smtl.hpp"

namespace stratmine::smtl {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Recursive descent. Precedence, loosest first: `->` (right-assoc), `|`, `&`,
// then prefix `!`.
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = implication();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw FormulaSyntaxError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool accept(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token) {
    if (!accept(token)) fail("expected '" + std::string(token) + "'");
  }

  Formula implication() {
    Formula lhs = disjunction();
    if (accept("->")) return Formula::implication(std::move(lhs), implication());
    return lhs;
  }

  Formula disjunction() {
    Formula f = conjunction();
    while (accept("|")) f = Formula::disjunction(std::move(f), conjunction());
    return f;
  }

  Formula conjunction() {
    Formula f = unary();
    while (accept("&")) f = Formula::conjunction(std::move(f), unary());
    return f;
  }

  Formula unary() {
    if (accept("!")) return Formula::negation(unary());
    return primary();
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail("expected a formula");
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::uint32_t integer() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer");
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || value > std::numeric_limits<std::uint32_t>::max()) {
      pos_ = start;
      fail("interval bound out of range");
    }
    return static_cast<std::uint32_t>(value);
  }

  std::optional<Interval> interval() {
    if (!accept("[")) return std::nullopt;
    const std::size_t start = pos_;
    Interval iv;
    iv.lo = integer();
    expect(":");
    iv.hi = integer();
    expect("]");
    if (iv.lo > iv.hi) {
      pos_ = start;
      fail("interval lower bound exceeds upper bound");
    }
    return iv;
  }

  std::optional<Rate> rate() {
    if (!accept("{")) return std::nullopt;
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '}') ++pos_;
    std::string_view body = text_.substr(start, pos_ - start);
    while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.remove_suffix(1);
    try {
      Rate r = Rate::parse(body);
      expect("}");
      return r;
    } catch (const std::invalid_argument& e) {
      pos_ = start;
      fail(e.what());
    }
  }

  Formula primary() {
    if (accept("(")) {
      Formula f = implication();
      expect(")");
      return f;
    }
    const std::size_t start = (skip_ws(), pos_);
    std::string name = identifier();
    const char next = peek();
    const bool temporal = name.size() == 1 && (name == "X" || name == "F" || name == "G" || name == "U") &&
                          (next == '(' || next == '[' || next == '{');
    if (temporal) return temporal_op(name[0], start);
    if (name == "true") return Formula::constant(true);
    if (name == "false") return Formula::constant(false);
    if (accept("=")) {
      skip_ws();
      const std::size_t ls = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      if (ls == pos_) fail("expected a label after '='");
      name += "=" + std::string(text_.substr(ls, pos_ - ls));
    }
    return Formula::atom(std::move(name));
  }

  Formula temporal_op(char op, std::size_t start) {
    auto iv = interval();
    const std::size_t rate_pos = (skip_ws(), pos_);
    auto r = rate();
    if (op == 'X' && (iv || r)) {
      pos_ = start;
      fail("X takes no interval or rate");
    }
    if (op == 'F' && r) {
      pos_ = rate_pos;
      fail("F takes no rate");
    }
    expect("(");
    Formula a = implication();
    if (op == 'U') {
      expect(",");
      Formula b = implication();
      expect(")");
      return Formula::until(std::move(a), std::move(b), iv, r);
    }
    expect(")");
    switch (op) {
      case 'X':
        return Formula::next(std::move(a));
      case 'F':
        return Formula::future(std::move(a), iv);
      default:
        return Formula::globally(std::move(a), iv, r);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

int precedence(Op op) {
  switch (op) {
    case Op::Implies:
      return 1;
    case Op::Or:
      return 2;
    case Op::And:
      return 3;
    case Op::Not:
      return 4;
    default:
      return 5;
  }
}

void render_into(const Node& n, std::string& out);

void render_child(const Node& child, bool parens, std::string& out) {
  if (parens) out += '(';
  render_into(child, out);
  if (parens) out += ')';
}

void decorations(const Node& n, std::string& out) {
  if (n.interval) out += "[" + std::to_string(n.interval->lo) + ":" + std::to_string(n.interval->hi) + "]";
  if (n.rate) out += "{" + n.rate->render() + "}";
}

void render_into(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::True:
      out += "true";
      return;
    case Op::False:
      out += "false";
      return;
    case Op::Atom:
      out += n.atom;
      return;
    case Op::Not:
      out += '!';
      render_child(*n.lhs, precedence(n.lhs->op) < 4, out);
      return;
    case Op::And:
    case Op::Or: {
      const int p = precedence(n.op);
      render_child(*n.lhs, precedence(n.lhs->op) < p, out);
      out += n.op == Op::And ? " & " : " | ";
      render_child(*n.rhs, precedence(n.rhs->op) <= p, out);
      return;
    }
    case Op::Implies:
      render_child(*n.lhs, precedence(n.lhs->op) <= 1, out);
      out += " -> ";
      render_child(*n.rhs, precedence(n.rhs->op) < 1, out);
      return;
    case Op::Next:
      out += "X(";
      render_into(*n.lhs, out);
      out += ')';
      return;
    case Op::Future:
    case Op::Globally:
      out += n.op == Op::Future ? 'F' : 'G';
      decorations(n, out);
      out += '(';
      render_into(*n.lhs, out);
      out += ')';
      return;
    case Op::Until:
      out += 'U';
      decorations(n, out);
      out += '(';
      render_into(*n.lhs, out);
      out += ", ";
      render_into(*n.rhs, out);
      out += ')';
      return;
  }
}

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

std::string render(const Formula& f) {
  std::string out;
  render_into(f.node(), out);
  return out;
}

}  // namespace stratmine::smtl
