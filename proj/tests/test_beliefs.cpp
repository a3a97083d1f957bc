#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "actpc/belief.hpp"

using namespace actpc;

namespace {

WorldState corridor_state(int s) {
  return WorldState({Term::fact("State", std::to_string(s))}, {"State", "Action"});
}

RewriteRule corridor_rule(const std::string& action) {
  return parse_rule("(Rule (lhs (State ?s)) (rhs (State ?s) (Action " + action + ")))");
}

Vector random_simplex(Rng& rng, int n) {
  std::uniform_real_distribution<double> uni(0.01, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = uni(rng);
  return v / v.sum();
}

OutcomeDistribution dist_from(const Vector& v) {
  OutcomeDistribution d;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    d.add("m" + std::to_string(i), v(i));
  return d;
}

const Projection kCorridorProj{{"State"}, false};

}  // namespace

TEST_CASE("softmax produces a shift-invariant simplex") {
  RuleParams p3{Vector::Zero(3)};
  SimplexVector u = rule_probs(p3);
  CHECK(u(0) == doctest::Approx(1.0 / 3));
  CHECK(u(1) == doctest::Approx(1.0 / 3));
  CHECK(u(2) == doctest::Approx(1.0 / 3));

  RuleParams p2{Vector(2)};
  p2.logits << 0.0, std::log(3.0);
  SimplexVector v = rule_probs(p2);
  CHECK(v(0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(0.75).epsilon(1e-12));

  RuleParams single{Vector(1)};
  single.logits << -17.0;
  CHECK(rule_probs(single)(0) == doctest::Approx(1.0));

  Rng rng(3);
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    Vector logits(4);
    for (int k = 0; k < 4; ++k) logits(k) = uni(rng);
    SimplexVector a = rule_probs({logits});
    CHECK(is_simplex(a));
    SimplexVector b = rule_probs({logits.array() + uni(rng)});
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
  RuleParams bad{Vector(2)};
  bad.logits << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(rule_probs(bad), Error);
}

TEST_CASE("softmax jacobian columns sum to zero") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    SimplexVector p = random_simplex(rng, 5);
    Matrix j = softmax_jacobian(p);
    for (int c = 0; c < 5; ++c) CHECK(std::abs(j.col(c).sum()) < 1e-12);
    CHECK((j - j.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("predicted_dist enumerates matching rules exactly") {
  std::vector<RewriteRule> rules = {corridor_rule("Right"), corridor_rule("Left")};
  Vector probs(2);
  probs << 0.75, 0.25;
  auto dist = predicted_dist(rules, probs, corridor_state(0), kCorridorProj);
  CHECK(dist.support_size() == 2);
  CHECK(dist.prob("((ctx (State 0)) (act Right))") == doctest::Approx(0.75));
  CHECK(dist.prob("((ctx (State 0)) (act Left))") == doctest::Approx(0.25));

  // One matching rule: point mass.
  std::vector<RewriteRule> one = {
      parse_rule("(Rule (lhs (State 0)) (rhs (State 0) (Action Right)))"),
      parse_rule("(Rule (lhs (State 7)) (rhs (State 7) (Action Left)))")};
  Vector half(2);
  half << 0.5, 0.5;
  auto point = predicted_dist(one, half, corridor_state(0), kCorridorProj);
  CHECK(point.prob("((ctx (State 0)) (act Right))") == doctest::Approx(1.0));

  Vector none(2);
  none << 0.5, 0.5;
  std::vector<RewriteRule> unmatched = {
      parse_rule("(Rule (lhs (State 7)) (rhs (State 7) (Action Left)))"),
      parse_rule("(Rule (lhs (State 8)) (rhs (State 8) (Action Left)))")};
  CHECK_THROWS_AS(predicted_dist(unmatched, none, corridor_state(0), kCorridorProj),
                  NoApplicableRule);
}

TEST_CASE("deterministic chained generation gives the same point mass") {
  std::vector<RewriteRule> rules = {
      parse_rule("(Rule (lhs (State ?s)) (rhs (State ?s) (Action Right)))")};
  Vector probs(1);
  probs << 1.0;
  Rng rng(4);
  GenerateOptions opts;
  opts.chain = true;
  for (int n : {10, 100}) {
    auto dist = predicted_dist(rules, probs, corridor_state(1), kCorridorProj, n, &rng, opts);
    CHECK(dist.prob("((ctx (State 1)) (act Right))") == doctest::Approx(1.0));
  }
}

TEST_CASE("exact and Monte-Carlo predicted_dist agree within 3-sigma") {
  Rng rng(1234);
  std::vector<RewriteRule> rules = {corridor_rule("Right"), corridor_rule("Left")};
  Vector probs(2);
  probs << 0.7, 0.3;
  auto exact = predicted_dist(rules, probs, corridor_state(0), kCorridorProj);
  const int n = 10000;
  auto mc = predicted_dist(rules, probs, corridor_state(0), kCorridorProj, n, &rng);
  for (const auto& [key, p] : exact.probs()) {
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(mc.prob(key) - p) <= 3.0 * sigma + 1e-12);
  }
}

TEST_CASE("observed_dist computes smoothed weighted frequencies") {
  HistoryWindow h(16);
  auto push = [&](const std::string& m, long t) {
    Transition tr;
    tr.outcome = m;
    tr.t = t;
    tr.weight = 1.0;
    h.push(tr);
  };
  for (int i = 0; i < 3; ++i) push("A", i);
  push("B", 3);
  auto d = observed_dist(h, 0.0, {"A", "B"});
  CHECK(d.prob("A") == doctest::Approx(0.75));
  CHECK(d.prob("B") == doctest::Approx(0.25));

  HistoryWindow empty(4);
  auto uniform = observed_dist(empty, 1.0, {"A", "B", "C", "D"});
  for (const char* m : {"A", "B", "C", "D"})
    CHECK(uniform.prob(m) == doctest::Approx(0.25));
  CHECK_THROWS_AS(observed_dist(empty, 0.0, {"A"}), Error);

  HistoryWindow one(4);
  {
    Transition tr;
    tr.outcome = "A";
    tr.t = 0;
    one.push(tr);
  }
  CHECK(observed_dist(one, 0.0, {"A"}).prob("A") == doctest::Approx(1.0));

  Rng rng(8);
  std::uniform_real_distribution<double> uni(0.1, 2.0);
  for (int i = 0; i < 50; ++i) {
    HistoryWindow w(32);
    for (long t = 0; t < 20; ++t) {
      Transition tr;
      tr.outcome = "m" + std::to_string(t % 5);
      tr.t = t;
      tr.weight = uni(rng);
      w.push(tr);
    }
    auto dist = observed_dist(w, uni(rng), {"m0", "m1", "m2", "m3", "m4", "m5"});
    double total = 0.0;
    for (const auto& [k, p] : dist.probs()) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("history window drops the oldest records and keeps time monotone") {
  HistoryWindow h(3);
  for (long t = 0; t < 5; ++t) {
    Transition tr;
    tr.t = t;
    tr.outcome = "m";
    h.push(tr);
  }
  CHECK(h.size() == 3);
  CHECK(h.records().front().t == 2);
  Transition back;
  back.t = 0;
  CHECK_THROWS_AS(h.push(back), Error);
}

TEST_CASE("kl divergence: examples and edge cases") {
  auto q = dist_from((Vector(2) << 1.0, 0.0).finished());
  auto p = dist_from((Vector(2) << 0.5, 0.5).finished());
  CHECK(kl(q, q) == doctest::Approx(0.0));
  CHECK(kl(q, p) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // Support violation: distinct infinite signal, not a crash.
  auto q2 = dist_from((Vector(2) << 0.5, 0.5).finished());
  auto p2 = dist_from((Vector(2) << 1.0, 0.0).finished());
  CHECK(std::isinf(kl(q2, p2)));
}

TEST_CASE("surprise: examples and relation to kl") {
  auto half = dist_from((Vector(2) << 0.5, 0.5).finished());
  CHECK(surprise(half, half) == doctest::Approx(std::log(2.0)));
  auto point = dist_from((Vector(1) << 1.0).finished());
  CHECK(surprise(point, point) == doctest::Approx(0.0));
  auto q = dist_from((Vector(2) << 1.0, 0.0).finished());
  CHECK(surprise(q, half) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gibbs inequality and surprise identity on random simplex pairs") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    std::uniform_int_distribution<int> dim(2, 6);
    const int n = dim(rng);
    auto q = dist_from(random_simplex(rng, n));
    auto p = dist_from(random_simplex(rng, n));
    const double d = kl(q, p);
    CHECK(d >= 0.0);
    CHECK(surprise(q, p) == doctest::Approx(d + entropy(q)).epsilon(1e-9));
    CHECK(kl(q, q) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("combined reward is the exact affine combination") {
  CHECK(combined_reward(0.5, 0.0, 0.0, {1.0, 0.0}) == doctest::Approx(-0.5));
  CHECK(combined_reward(0.0, 0.6931, 1.0, {1.0, 1.0}) == doctest::Approx(1.6931));
  CHECK(combined_reward(0.0, 0.0, 0.0, {1.0, 1.0}) == 0.0);
}

TEST_CASE("outcome keys are canonical and csv serialization is stable") {
  WorldState s({Term::fact("State", "0"), Term::fact("PosX", "3")},
               {"State", "Action"});
  CHECK(outcome_key(kCorridorProj, s, "Right") == "((ctx (State 0)) (act Right))");
  Projection extended{{"State"}, true};
  WorldState next({Term::fact("State", "1")}, {"State"});
  CHECK(outcome_key(extended, s, "Right", &next) ==
        "((ctx (State 0)) (act Right) (next (State 1)))");

  OutcomeDistribution d;
  d.add("((ctx (State 0)) (act Right))", 0.75);
  d.add("((ctx (State 0)) (act Left))", 0.25);
  CHECK(d.to_csv() ==
        "outcome_key,prob\n"
        "((ctx (State 0)) (act Left)),0.25\n"
        "((ctx (State 0)) (act Right)),0.75\n");
}
