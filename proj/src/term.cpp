#include "actpc/term.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace actpc {

bool Term::is_ground() const {
  if (kind == Kind::Variable) return false;
  return std::all_of(children.begin(), children.end(),
                     [](const Term& c) { return c.is_ground(); });
}

void Term::collect_variables(std::set<std::string>& out) const {
  if (kind == Kind::Variable) {
    out.insert(label);
    return;
  }
  for (const Term& c : children) c.collect_variables(out);
}

std::set<std::string> Term::variables() const {
  std::set<std::string> vars;
  collect_variables(vars);
  return vars;
}

bool Term::operator==(const Term& other) const {
  return kind == other.kind && label == other.label &&
         children == other.children;
}

bool Term::operator<(const Term& other) const {
  return to_string(*this) < to_string(other);
}

namespace {

void write_term(const Term& t, std::string& out) {
  if (t.kind == Term::Kind::Variable) {
    out += '?';
    out += t.label;
    return;
  }
  if (t.children.empty()) {
    out += t.label;
    return;
  }
  out += '(';
  out += t.label;
  for (const Term& c : t.children) {
    out += ' ';
    write_term(c, out);
  }
  out += ')';
}

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool done() {
    skip_ws();
    return pos >= text.size();
  }

  std::string symbol() {
    std::size_t start = pos;
    while (pos < text.size()) {
      char c = text[pos];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')') break;
      ++pos;
    }
    if (pos == start) throw Error("expected symbol at position " + std::to_string(pos));
    return text.substr(start, pos - start);
  }

  Term term() {
    skip_ws();
    if (pos >= text.size()) throw Error("unexpected end of input");
    if (text[pos] == '(') {
      ++pos;
      skip_ws();
      if (pos < text.size() && text[pos] == ')')
        throw Error("empty s-expression at position " + std::to_string(pos));
      std::string head = symbol();
      if (!head.empty() && head[0] == '?')
        throw Error("variable cannot head a compound term: " + head);
      std::vector<Term> children;
      skip_ws();
      while (pos < text.size() && text[pos] != ')') {
        children.push_back(term());
        skip_ws();
      }
      if (pos >= text.size()) throw Error("missing ')' in s-expression");
      ++pos;  // consume ')'
      return Term::node(std::move(head), std::move(children));
    }
    std::string sym = symbol();
    if (sym[0] == '?') {
      if (sym.size() == 1) throw Error("empty variable name");
      return Term::variable(sym.substr(1));
    }
    return Term::constant(std::move(sym));
  }
};

}  // namespace

std::string to_string(const Term& t) {
  std::string out;
  write_term(t, out);
  return out;
}

Term parse_term(const std::string& text) {
  Parser p{text};
  Term t = p.term();
  if (!p.done()) throw Error("trailing input after term: " + text);
  return t;
}

std::vector<Term> parse_terms(const std::string& text) {
  Parser p{text};
  std::vector<Term> out;
  while (!p.done()) out.push_back(p.term());
  return out;
}

WorldState::WorldState(std::vector<Term> facts, std::set<std::string> slot_labels)
    : slot_labels_(std::move(slot_labels)) {
  for (Term& f : facts) insert(std::move(f));
}

void WorldState::set_slot_labels(std::set<std::string> labels) {
  slot_labels_ = std::move(labels);
}

void WorldState::insert(Term fact) {
  if (!fact.is_ground()) throw Error("world state fact must be ground: " + to_string(fact));
  if (slot_labels_.count(fact.label)) {
    std::erase_if(facts_, [&](const Term& f) { return f.label == fact.label; });
  }
  auto it = std::lower_bound(facts_.begin(), facts_.end(), fact);
  if (it != facts_.end() && *it == fact) return;
  facts_.insert(it, std::move(fact));
}

bool WorldState::erase(const Term& fact) {
  auto it = std::lower_bound(facts_.begin(), facts_.end(), fact);
  if (it == facts_.end() || !(*it == fact)) return false;
  facts_.erase(it);
  return true;
}

bool WorldState::contains(const Term& fact) const {
  auto it = std::lower_bound(facts_.begin(), facts_.end(), fact);
  return it != facts_.end() && *it == fact;
}

std::optional<Term> WorldState::fact_with_label(const std::string& label) const {
  for (const Term& f : facts_)
    if (f.label == label) return f;
  return std::nullopt;
}

std::optional<std::string> WorldState::slot_value(const std::string& label) const {
  auto f = fact_with_label(label);
  if (!f || f->children.size() != 1) return std::nullopt;
  return to_string(f->children[0]);
}

std::string WorldState::digest() const {
  std::string out;
  for (const Term& f : facts_) {
    write_term(f, out);
    out += ' ';
  }
  return out;
}

std::string to_string(const WorldState& s) {
  std::string out = "{";
  bool first = true;
  for (const Term& f : s.facts()) {
    if (!first) out += ' ';
    first = false;
    out += to_string(f);
  }
  out += '}';
  return out;
}

}  // namespace actpc
