#include "actpc/snapshot.hpp"

#include <cstdio>
#include <fstream>

namespace actpc {

using nlohmann::json;

std::string config_hash(const json& config) {
  const std::string dump = config.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string rule_entry(const RewriteRule& rule, double logit) {
  std::string out = "(Entry (logit " + fmt_double(logit) + ") (origin " +
                    to_string(rule.origin()) + ") " + rule.id() + ")";
  return out;
}

}  // namespace

Snapshot Snapshot::from_trainer(const Trainer& trainer, json config) {
  Snapshot snap;
  snap.config = std::move(config);
  snap.config_hash = actpc::config_hash(snap.config);
  snap.iteration = trainer.iteration();
  snap.rng_state = trainer.rng_state();
  snap.rules = trainer.rules();
  snap.logits = trainer.params().logits;
  snap.causal = trainer.airis().rules();
  return snap;
}

std::string Snapshot::serialize() const {
  json j;
  j["config"] = config;
  j["config_hash"] = config_hash;
  j["iteration"] = iteration;
  j["rng_state"] = rng_state;
  json rule_list = json::array();
  for (std::size_t i = 0; i < rules.size(); ++i)
    rule_list.push_back(rule_entry(rules[i], logits(static_cast<Eigen::Index>(i))));
  j["rules"] = std::move(rule_list);
  json causal_list = json::array();
  for (const CausalRule& cr : causal) causal_list.push_back(cr.to_sexpr());
  j["causal"] = std::move(causal_list);
  return j.dump(2) + "\n";
}

Snapshot Snapshot::deserialize(const std::string& text) {
  json j = json::parse(text);
  Snapshot snap;
  snap.config = j.at("config");
  snap.config_hash = j.at("config_hash").get<std::string>();
  snap.iteration = j.at("iteration").get<long>();
  snap.rng_state = j.at("rng_state").get<std::string>();
  const auto& rule_list = j.at("rules");
  snap.logits = Vector::Zero(static_cast<Eigen::Index>(rule_list.size()));
  Eigen::Index i = 0;
  for (const auto& entry_text : rule_list) {
    Term entry = parse_term(entry_text.get<std::string>());
    if (entry.label != "Entry" || entry.children.size() != 3)
      throw Error("bad snapshot rule entry");
    snap.logits(i++) = std::stod(entry.children[0].children.at(0).label);
    RuleOrigin origin = rule_origin_from_string(entry.children[1].children.at(0).label);
    const Term& rule_term = entry.children[2];
    snap.rules.push_back(parse_rule(to_string(rule_term), origin));
  }
  for (const auto& causal_text : j.at("causal"))
    snap.causal.push_back(parse_causal_rule(causal_text.get<std::string>()));
  return snap;
}

void Snapshot::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write snapshot: " + path);
  out << serialize();
}

Snapshot Snapshot::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read snapshot: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  try {
    return deserialize(text);
  } catch (const json::exception& e) {
    throw Error("malformed snapshot " + path + ": " + e.what());
  }
}

}  // namespace actpc
