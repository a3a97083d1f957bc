#pragma once

// Test-only oracle: exhaustive edit-script search for the unit-cost ordered
// tree edit distance, written directly from the three-case recurrence on
// forests. Independent of the production implementation.

#include <map>
#include <string>
#include <vector>

#include "actpc/term.hpp"

namespace oracle {

using actpc::Term;
using Forest = std::vector<const Term*>;

inline std::string label_of(const Term& t) {
  return t.kind == Term::Kind::Variable ? "?" + t.label : t.label;
}

inline int tree_size(const Term& t) {
  int n = 1;
  for (const Term& c : t.children) n += tree_size(c);
  return n;
}

inline std::string forest_key(const Forest& f) {
  std::string key;
  for (const Term* t : f) key += actpc::to_string(*t) + "#";
  return key;
}

inline double fed(const Forest& a, const Forest& b,
                  std::map<std::pair<std::string, std::string>, double>& memo) {
  if (a.empty()) {
    int n = 0;
    for (const Term* t : b) n += tree_size(*t);
    return n;
  }
  if (b.empty()) {
    int n = 0;
    for (const Term* t : a) n += tree_size(*t);
    return n;
  }
  auto key = std::make_pair(forest_key(a), forest_key(b));
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  const Term* v = a.back();
  const Term* w = b.back();

  Forest a_del(a.begin(), a.end() - 1);
  for (const Term& c : v->children) a_del.push_back(&c);
  double best = 1.0 + fed(a_del, b, memo);

  Forest b_ins(b.begin(), b.end() - 1);
  for (const Term& c : w->children) b_ins.push_back(&c);
  best = std::min(best, 1.0 + fed(a, b_ins, memo));

  Forest a_rest(a.begin(), a.end() - 1);
  Forest b_rest(b.begin(), b.end() - 1);
  Forest va, wb;
  for (const Term& c : v->children) va.push_back(&c);
  for (const Term& c : w->children) wb.push_back(&c);
  const double rel = label_of(*v) == label_of(*w) ? 0.0 : 1.0;
  best = std::min(best, fed(a_rest, b_rest, memo) + fed(va, wb, memo) + rel);

  memo[key] = best;
  return best;
}

inline double tree_edit_distance(const Term& a, const Term& b) {
  std::map<std::pair<std::string, std::string>, double> memo;
  return fed({&a}, {&b}, memo);
}

}  // namespace oracle
