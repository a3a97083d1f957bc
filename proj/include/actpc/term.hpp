#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace actpc {

/// Base error type for hard contract violations. Absence of a result is a
/// value (std::optional), not an error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A symbolic term: a finite labeled tree. Variables occur only at leaves
/// and are written with a leading '?' in the s-expression syntax.
struct Term {
  enum class Kind { Constant, Variable };

  Kind kind = Kind::Constant;
  std::string label;
  std::vector<Term> children;

  static Term constant(std::string label) {
    return Term{Kind::Constant, std::move(label), {}};
  }
  static Term variable(std::string name) {
    return Term{Kind::Variable, std::move(name), {}};
  }
  static Term node(std::string label, std::vector<Term> children) {
    return Term{Kind::Constant, std::move(label), std::move(children)};
  }
  /// Convenience for slot facts like (State 0).
  static Term fact(std::string label, std::string value) {
    return node(std::move(label), {constant(std::move(value))});
  }

  bool is_variable() const { return kind == Kind::Variable; }
  bool is_leaf() const { return children.empty(); }
  bool is_ground() const;

  void collect_variables(std::set<std::string>& out) const;
  std::set<std::string> variables() const;

  bool operator==(const Term& other) const;
  bool operator<(const Term& other) const;  // lexicographic on serialization
};

/// Serialize to the parenthesized s-expression form, e.g. "(State 0)".
std::string to_string(const Term& t);

/// Parse one term from an s-expression. Throws Error on malformed input.
Term parse_term(const std::string& text);

/// Parse a whitespace-separated sequence of terms.
std::vector<Term> parse_terms(const std::string& text);

/// A set of ground facts. Facts are kept sorted by serialization so that
/// matching and iteration are deterministic. Labels registered as slots are
/// unique: inserting a second fact with the same slot label replaces the
/// first (e.g. at most one State fact).
class WorldState {
 public:
  WorldState() = default;
  explicit WorldState(std::vector<Term> facts,
                      std::set<std::string> slot_labels = {});

  void set_slot_labels(std::set<std::string> labels);
  const std::set<std::string>& slot_labels() const { return slot_labels_; }

  /// Inserts a ground fact. Throws Error if the fact contains variables.
  void insert(Term fact);
  bool erase(const Term& fact);

  const std::vector<Term>& facts() const { return facts_; }
  std::size_t size() const { return facts_.size(); }
  bool contains(const Term& fact) const;

  /// First fact whose head label matches, if any. For slot labels this is
  /// the unique slot value.
  std::optional<Term> fact_with_label(const std::string& label) const;
  /// Value of a unary slot fact, e.g. slot_value("State") == "2".
  std::optional<std::string> slot_value(const std::string& label) const;

  /// Canonical serialization of all facts, usable as a hash key.
  std::string digest() const;

  bool operator==(const WorldState& other) const {
    return facts_ == other.facts_;
  }

 private:
  std::vector<Term> facts_;  // sorted, unique
  std::set<std::string> slot_labels_;
};

std::string to_string(const WorldState& s);

}  // namespace actpc
