#pragma once

#include <json.hpp>

#include "actpc/airis.hpp"
#include "actpc/trainer.hpp"

namespace actpc {

/// On-disk training state: the rule store as s-expressions (rewrite rules
/// with logits, causal rules with confidence counts), the iteration counter,
/// the rng state and the config (plus its hash) in one JSON container.
/// save(load(x)) is byte-identical.
struct Snapshot {
  nlohmann::json config;
  std::string config_hash;
  long iteration = 0;
  std::string rng_state;
  std::vector<RewriteRule> rules;
  Vector logits;
  std::vector<CausalRule> causal;

  static Snapshot from_trainer(const Trainer& trainer, nlohmann::json config);

  std::string serialize() const;
  static Snapshot deserialize(const std::string& text);

  void save(const std::string& path) const;
  static Snapshot load(const std::string& path);
};

/// FNV-1a hash of the canonical JSON dump, hex-encoded.
std::string config_hash(const nlohmann::json& config);

}  // namespace actpc
