#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "actpc/generate.hpp"
#include "actpc/rule.hpp"
#include "ted_oracle.hpp"

using namespace actpc;

namespace {

WorldState corridor_state(int s) {
  return WorldState({Term::fact("State", std::to_string(s))}, {"State", "Action"});
}

RewriteRule corridor_rule(const std::string& action) {
  return parse_rule("(Rule (lhs (State ?s)) (rhs (State ?s) (Action " + action + ")))");
}

// Small random terms over a fixed alphabet, for property tests.
Term random_term(Rng& rng, int depth = 0) {
  static const char* labels[] = {"State", "Action", "Sees", "Pos", "Color", "A", "B"};
  static const char* leaves[] = {"0", "1", "2", "Right", "Left", "Red", "Round"};
  std::uniform_int_distribution<int> coin(0, 9);
  if (depth >= 2 || coin(rng) < 4) {
    if (coin(rng) < 2) return Term::variable(std::string(1, 'a' + coin(rng) % 3));
    return Term::constant(leaves[coin(rng) % 7]);
  }
  std::uniform_int_distribution<int> width(1, 2);
  std::vector<Term> children;
  for (int i = 0, n = width(rng); i < n; ++i)
    children.push_back(random_term(rng, depth + 1));
  return Term::node(labels[coin(rng) % 7], std::move(children));
}

RewriteRule random_rule(Rng& rng) {
  for (;;) {
    Term lhs = random_term(rng);
    Term rhs = random_term(rng);
    if (lhs.is_leaf()) lhs = Term::node("F", {lhs});
    if (rhs.is_leaf()) rhs = Term::node("F", {rhs});
    try {
      return RewriteRule(Pattern{{lhs}}, Pattern{{rhs}}, RuleOrigin::Mutation);
    } catch (const Error&) {
      // rhs used a variable missing from lhs; retry
    }
  }
}

}  // namespace

TEST_CASE("s-expression parse and print round trip") {
  for (const char* text : {"(State 0)", "?s",
                           "(Rule (lhs (State ?s)) (rhs (State ?s) (Action Right)))",
                           "(Pos 1 2)"}) {
    CHECK(to_string(parse_term(text)) == text);
  }
  CHECK_THROWS_AS(parse_term("(State"), Error);
  CHECK_THROWS_AS(parse_term("()"), Error);
  CHECK_THROWS_AS(parse_term("(State 0) junk"), Error);

  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Term t = random_term(rng);
    CHECK(parse_term(to_string(t)) == t);
  }
}

TEST_CASE("world state keeps facts sorted, ground and slot-unique") {
  WorldState s({}, {"State"});
  s.insert(Term::fact("State", "1"));
  s.insert(Term::fact("State", "2"));  // replaces: State is a slot
  CHECK(s.size() == 1);
  CHECK(s.slot_value("State") == "2");
  s.insert(Term::fact("Sees", "Food"));
  s.insert(Term::fact("Sees", "Food"));  // duplicate fact, not a slot
  CHECK(s.size() == 2);
  CHECK_THROWS_AS(s.insert(Term::node("State", {Term::variable("x")})), Error);
}

TEST_CASE("match binds variables against facts") {
  Pattern lhs{{Term::node("State", {Term::variable("s")})}};
  auto b = match(lhs, corridor_state(2));
  REQUIRE(b);
  CHECK(b->at("s") == Term::constant("2"));

  Pattern exact{{Term::fact("State", "0")}};
  CHECK_FALSE(match(exact, corridor_state(1)));

  Pattern two{{Term::node("State", {Term::variable("s")}),
               Term::node("Sees", {Term::variable("f")})}};
  CHECK_FALSE(match(two, corridor_state(1)));
}

TEST_CASE("match is consistent across repeated variables") {
  WorldState s({Term::fact("A", "1"), Term::fact("B", "2")}, {});
  Pattern same{{Term::node("A", {Term::variable("x")}),
                Term::node("B", {Term::variable("x")})}};
  CHECK_FALSE(match(same, s));
  WorldState s2({Term::fact("A", "1"), Term::fact("B", "1")}, {});
  auto b = match(same, s2);
  REQUIRE(b);
  CHECK(b->at("x") == Term::constant("1"));
}

TEST_CASE("substitute instantiates patterns") {
  Pattern p{{Term::node("State", {Term::variable("s")}), Term::fact("Action", "Right")}};
  Bindings b{{"s", Term::constant("0")}};
  auto facts = substitute(p, b);
  CHECK(to_string(facts[0]) == "(State 0)");
  CHECK(to_string(facts[1]) == "(Action Right)");

  Pattern ground{{Term::fact("State", "1")}};
  CHECK(substitute(ground, {}) == ground.facts);

  Pattern open{{Term::node("State", {Term::variable("s")})}};
  CHECK_THROWS_AS(substitute(open, {}), Error);
}

TEST_CASE("apply_rule rewrites the matched facts") {
  RewriteRule r1 = corridor_rule("Right");
  auto out = apply_rule(r1, corridor_state(2));
  REQUIRE(out);
  CHECK(out->slot_value("State") == "2");
  CHECK(out->slot_value("Action") == "Right");
  CHECK(out->size() == 2);

  RewriteRule specialized = parse_rule("(Rule (lhs (State 0)) (rhs (State 0) (Action Right)))");
  CHECK_FALSE(apply_rule(specialized, corridor_state(1)));

  RewriteRule identity = parse_rule("(Rule (lhs (State ?s)) (rhs (State ?s)))");
  auto same = apply_rule(identity, corridor_state(1));
  REQUIRE(same);
  CHECK(*same == corridor_state(1));
}

TEST_CASE("apply_rule determinism: same input, same output") {
  RewriteRule r = corridor_rule("Right");
  for (int i = 0; i < 10; ++i)
    CHECK(*apply_rule(r, corridor_state(1)) == *apply_rule(r, corridor_state(1)));
}

TEST_CASE("generate samples matching rules proportionally") {
  std::vector<RewriteRule> rules = {corridor_rule("Right"), corridor_rule("Left")};
  std::vector<double> probs = {0.5, 0.5};
  Rng rng(42);
  int right = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto res = generate(rules, probs, corridor_state(0), rng);
    if (res.state.slot_value("Action") == "Right") ++right;
  }
  const double freq = static_cast<double>(right) / n;
  CHECK(freq == doctest::Approx(0.5).epsilon(0.04));  // 0.5 +/- 0.02

  // Degenerate distribution always picks the mass-carrying rule.
  std::vector<double> degenerate = {1.0, 0.0};
  for (int i = 0; i < 20; ++i) {
    auto res = generate(rules, degenerate, corridor_state(0), rng);
    CHECK(res.state.slot_value("Action") == "Right");
  }

  // Nothing matches: distinct error.
  std::vector<RewriteRule> none = {
      parse_rule("(Rule (lhs (State 9)) (rhs (State 9) (Action Right)))")};
  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(generate(none, one, corridor_state(0), rng), NoApplicableRule);
}

TEST_CASE("generate is bit-reproducible under a fixed seed") {
  std::vector<RewriteRule> rules = {corridor_rule("Right"), corridor_rule("Left")};
  std::vector<double> probs = {0.3, 0.7};
  std::vector<std::string> first, second;
  for (int pass = 0; pass < 2; ++pass) {
    Rng rng(123);
    auto& log = pass == 0 ? first : second;
    for (int i = 0; i < 50; ++i)
      log.push_back(*generate(rules, probs, corridor_state(0), rng).state.slot_value("Action"));
  }
  CHECK(first == second);
}

TEST_CASE("renormalized probabilities over the matching subset sum to one") {
  Rng rng(5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> probs(6);
    for (double& p : probs) p = uni(rng);
    std::vector<std::size_t> subset = {0, 2, 5};
    auto renorm = renormalize(probs, subset);
    double sum = 0.0;
    for (double p : renorm) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("chained generation rewrites until an action appears") {
  // A labeling rule fires first, then a policy rule conditioned on the label.
  std::vector<RewriteRule> rules = {
      parse_rule("(Rule (lhs (Sees Red)) (rhs (Sees Red) (Label PatternA)))"),
      parse_rule("(Rule (lhs (Label PatternA)) (rhs (Label PatternA) (Action Grab)))")};
  std::vector<double> probs = {0.5, 0.5};
  WorldState s({Term::fact("Sees", "Red")}, {"Action", "Label"});
  Rng rng(9);
  GenerateOptions opts;
  opts.chain = true;
  auto res = generate(rules, probs, s, rng, opts);
  CHECK(res.state.slot_value("Action") == "Grab");
  // The labeling rule may idempotently re-fire before the policy rule is
  // drawn, so the chain length is stochastic but bounded.
  CHECK(res.chain.size() >= 2);
  CHECK(res.chain.size() <= 8);
  CHECK(res.rule_index == 1);  // the action-producing rule ends the chain
}

TEST_CASE("rule distance matches the exhaustive edit-script oracle") {
  RewriteRule right = corridor_rule("Right");
  RewriteRule left = corridor_rule("Left");
  RewriteRule specialized =
      parse_rule("(Rule (lhs (State 0)) (rhs (State 0) (Action Right)))");

  CHECK(rule_distance(right, right) == 0.0);

  // Single leaf relabel Right -> Left.
  const double d_rl = oracle::tree_edit_distance(right.as_term(), left.as_term());
  CHECK(d_rl == 1.0);
  CHECK(rule_distance(right, left) == d_rl);

  // Specializing the variable relabels it in both lhs and rhs: the oracle
  // counts two leaf relabels, not one.
  const double d_spec = oracle::tree_edit_distance(right.as_term(), specialized.as_term());
  CHECK(d_spec == 2.0);
  CHECK(rule_distance(right, specialized) == d_spec);
}

TEST_CASE("rule distance agrees with the oracle on random rules") {
  Rng rng(2024);
  for (int i = 0; i < 60; ++i) {
    RewriteRule a = random_rule(rng);
    RewriteRule b = random_rule(rng);
    CHECK(rule_distance(a, b) ==
          doctest::Approx(oracle::tree_edit_distance(a.as_term(), b.as_term())));
  }
}

TEST_CASE("rule distance is a metric on sampled rule triples") {
  Rng rng(77);
  for (int i = 0; i < 80; ++i) {
    RewriteRule a = random_rule(rng);
    RewriteRule b = random_rule(rng);
    RewriteRule c = random_rule(rng);
    const double ab = rule_distance(a, b);
    const double ba = rule_distance(b, a);
    const double ac = rule_distance(a, c);
    const double cb = rule_distance(c, b);
    CHECK(ab == ba);                       // symmetry
    CHECK(rule_distance(a, a) == 0.0);     // identity
    CHECK(ab <= ac + cb + 1e-12);          // triangle inequality
    if (a.id() == b.id()) CHECK(ab == 0.0);
    if (ab == 0.0) CHECK(a.id() == b.id());
  }
}

TEST_CASE("alpha-equivalent rules share one id") {
  RewriteRule a = parse_rule("(Rule (lhs (State ?x)) (rhs (State ?x) (Action Right)))");
  RewriteRule b = parse_rule("(Rule (lhs (State ?other)) (rhs (State ?other) (Action Right)))");
  CHECK(a.id() == b.id());
  CHECK(rule_distance(a, b) == 0.0);
}

TEST_CASE("rhs variables must occur in the lhs") {
  CHECK_THROWS_AS(parse_rule("(Rule (lhs (State 0)) (rhs (State ?s)))"), Error);
}
