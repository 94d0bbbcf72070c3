#ifndef XORDY_DERIVATION_HPP
#define XORDY_DERIVATION_HPP

// Proof trees over the intruder deduction rules, proof checking, the
// normal-proof predicate and the size-decreasing normalization rewrites.

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "xordy/term.hpp"

namespace xordy {

enum class Rule : std::uint8_t {
  Ax,
  Split1,
  Split2,
  Sdec,
  Adec,
  Pk,
  Pair,
  Senc,
  Aenc,
  Xor
};

inline const char* rule_name(Rule r) {
  switch (r) {
    case Rule::Ax: return "ax";
    case Rule::Split1:
    case Rule::Split2: return "split";
    case Rule::Sdec: return "sdec";
    case Rule::Adec: return "adec";
    case Rule::Pk: return "pk";
    case Rule::Pair: return "pair";
    case Rule::Senc: return "senc";
    case Rule::Aenc: return "aenc";
    case Rule::Xor: return "xor";
  }
  return "?";
}

struct Derivation {
  TermId conclusion = 0;
  Rule rule = Rule::Ax;
  std::vector<Derivation> children;

  static Derivation ax(TermId t) { return Derivation{t, Rule::Ax, {}}; }
  static Derivation make(TermId t, Rule r, std::vector<Derivation> ch) {
    return Derivation{t, r, std::move(ch)};
  }

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const Derivation& c : children) n += c.node_count();
    return n;
  }
};

// The xor rule is a destructor ("xor_d") exactly when its conclusion is
// standard; otherwise it is the constructor occurrence "xor_c".
inline bool is_constructor(TermArena& a, const Derivation& d) {
  switch (d.rule) {
    case Rule::Pk:
    case Rule::Pair:
    case Rule::Senc:
    case Rule::Aenc: return true;
    case Rule::Xor: return !a.is_standard(d.conclusion);
    default: return false;
  }
}

inline bool is_destructor(TermArena& a, const Derivation& d) {
  switch (d.rule) {
    case Rule::Split1:
    case Rule::Split2:
    case Rule::Sdec:
    case Rule::Adec: return true;
    case Rule::Xor: return a.is_standard(d.conclusion);
    default: return false;
  }
}

inline void collect_axioms(const Derivation& d, std::vector<TermId>& out) {
  if (d.rule == Rule::Ax) out.push_back(d.conclusion);
  for (const Derivation& c : d.children) collect_axioms(c, out);
}

inline std::vector<TermId> axioms(const Derivation& d) {
  std::vector<TermId> out;
  collect_axioms(d, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void collect_terms(const Derivation& d, std::vector<TermId>& out) {
  out.push_back(d.conclusion);
  for (const Derivation& c : d.children) collect_terms(c, out);
}

// terms(pi): every label in the tree.
inline std::vector<TermId> proof_terms(const Derivation& d) {
  std::vector<TermId> out;
  collect_terms(d, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct CheckReport {
  bool ok = true;
  std::string reason;
  std::vector<std::size_t> path;  // child indices from the root to the offending node

  static CheckReport accept() { return {}; }
  static CheckReport reject(std::string why, std::vector<std::size_t> at) {
    return CheckReport{false, std::move(why), std::move(at)};
  }
};

// Is (conclusion, rule, child conclusions) an instance of a Table-2 rule?
inline bool rule_instance_ok(TermArena& a, const Derivation& d, std::string* why) {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  const auto& ch = d.children;
  switch (d.rule) {
    case Rule::Ax:
      if (!ch.empty()) return fail("ax must have no premises");
      return true;
    case Rule::Split1:
    case Rule::Split2: {
      if (ch.size() != 1) return fail("split takes one premise");
      const TermNode& p = a.node(ch[0].conclusion);
      if (p.shape != Shape::Pair) return fail("split premise is not a pair");
      TermId want = p.children[d.rule == Rule::Split1 ? 0 : 1];
      if (d.conclusion != want) return fail("split conclusion mismatch");
      return true;
    }
    case Rule::Sdec: {
      if (ch.size() != 2) return fail("sdec takes two premises");
      const TermNode& p = a.node(ch[0].conclusion);
      if (p.shape != Shape::Senc) return fail("sdec major premise is not senc");
      if (ch[1].conclusion != p.children[1]) return fail("sdec key premise mismatch");
      if (d.conclusion != p.children[0]) return fail("sdec conclusion mismatch");
      return true;
    }
    case Rule::Adec: {
      if (ch.size() != 2) return fail("adec takes two premises");
      const TermNode& p = a.node(ch[0].conclusion);
      if (p.shape != Shape::Aenc) return fail("adec major premise is not aenc");
      TermId pkterm = p.children[1];
      if (ch[1].conclusion != a.node(pkterm).children[0]) return fail("adec key premise mismatch");
      if (d.conclusion != p.children[0]) return fail("adec conclusion mismatch");
      return true;
    }
    case Rule::Pk: {
      if (ch.size() != 1) return fail("pk takes one premise");
      if (!a.is_key_atom(ch[0].conclusion)) return fail("pk premise is not a key");
      if (d.conclusion != a.pk(ch[0].conclusion)) return fail("pk conclusion mismatch");
      return true;
    }
    case Rule::Pair: {
      if (ch.size() != 2) return fail("pair takes two premises");
      if (d.conclusion != a.pair(ch[0].conclusion, ch[1].conclusion))
        return fail("pair conclusion mismatch");
      return true;
    }
    case Rule::Senc: {
      if (ch.size() != 2) return fail("senc takes two premises");
      if (d.conclusion != a.senc(ch[0].conclusion, ch[1].conclusion))
        return fail("senc conclusion mismatch");
      return true;
    }
    case Rule::Aenc: {
      if (ch.size() != 2) return fail("aenc takes two premises");
      if (a.shape(ch[1].conclusion) != Shape::Pk) return fail("aenc key premise is not pk(.)");
      if (d.conclusion != a.aenc(ch[0].conclusion, ch[1].conclusion))
        return fail("aenc conclusion mismatch");
      return true;
    }
    case Rule::Xor: {
      std::vector<TermId> parts;
      parts.reserve(ch.size());
      for (const Derivation& c : ch) parts.push_back(c.conclusion);
      if (d.conclusion != a.xor_of(parts)) return fail("xor conclusion mismatch");
      return true;
    }
  }
  return fail("unknown rule");
}

namespace detail {
inline bool check_node(TermArena& a, const Derivation& d,
                       const std::unordered_set<TermId>& x, CheckReport& rep,
                       std::vector<std::size_t>& path) {
  std::string why;
  if (!rule_instance_ok(a, d, &why)) {
    rep = CheckReport::reject("bad rule instance: " + why, path);
    return false;
  }
  if (d.rule == Rule::Ax && x.count(d.conclusion) == 0) {
    rep = CheckReport::reject("axiom outside knowledge set", path);
    return false;
  }
  for (std::size_t i = 0; i < d.children.size(); ++i) {
    path.push_back(i);
    if (!check_node(a, d.children[i], x, rep, path)) return false;
    path.pop_back();
  }
  return true;
}
}  // namespace detail

// Accepts iff every node is a rule instance and axioms(d) are in X.
inline CheckReport check_derivation(TermArena& a, const Derivation& d,
                                    std::span<const TermId> x) {
  std::unordered_set<TermId> xs(x.begin(), x.end());
  CheckReport rep = CheckReport::accept();
  std::vector<std::size_t> path;
  detail::check_node(a, d, xs, rep, path);
  return rep;
}

// Normal proofs: no split/sdec/adec over a constructor-ended leftmost
// premise; xor nodes have pairwise-distinct premises, none equal to the
// conclusion, none themselves concluded by xor.
inline bool is_normal(TermArena& a, const Derivation& d) {
  switch (d.rule) {
    case Rule::Split1:
    case Rule::Split2:
    case Rule::Sdec:
    case Rule::Adec:
      if (is_constructor(a, d.children[0])) return false;
      break;
    case Rule::Xor: {
      std::unordered_set<TermId> seen;
      for (const Derivation& c : d.children) {
        if (c.rule == Rule::Xor) return false;
        if (c.conclusion == d.conclusion) return false;
        if (!seen.insert(c.conclusion).second) return false;
      }
      break;
    }
    default: break;
  }
  for (const Derivation& c : d.children)
    if (!is_normal(a, c)) return false;
  return true;
}

// Exhaustive application of the three size-decreasing rewrites:
// destructor-over-constructor collapse, xor flattening, and pairwise
// removal of duplicate xor premises. Preserves the conclusion, never
// enlarges the axiom set, never increases the node count.
inline Derivation normalize_derivation(TermArena& a, Derivation d) {
  for (Derivation& c : d.children) c = normalize_derivation(a, std::move(c));

  // Destructor over matching constructor: replace by the relevant child.
  switch (d.rule) {
    case Rule::Split1:
      if (d.children[0].rule == Rule::Pair) return std::move(d.children[0].children[0]);
      break;
    case Rule::Split2:
      if (d.children[0].rule == Rule::Pair) return std::move(d.children[0].children[1]);
      break;
    case Rule::Sdec:
      if (d.children[0].rule == Rule::Senc) return std::move(d.children[0].children[0]);
      break;
    case Rule::Adec:
      if (d.children[0].rule == Rule::Aenc) return std::move(d.children[0].children[0]);
      break;
    default: break;
  }

  if (d.rule != Rule::Xor) return d;

  // Flatten xor-ended premises.
  std::vector<Derivation> flat;
  flat.reserve(d.children.size());
  for (Derivation& c : d.children) {
    if (c.rule == Rule::Xor) {
      for (Derivation& g : c.children) flat.push_back(std::move(g));
    } else {
      flat.push_back(std::move(c));
    }
  }
  // Remove duplicate-conclusion premises in pairs (keep one if odd).
  std::map<TermId, int> count;
  for (const Derivation& c : flat) count[c.conclusion]++;
  std::vector<Derivation> kept;
  std::map<TermId, bool> taken;
  for (Derivation& c : flat) {
    if (count[c.conclusion] % 2 == 1 && !taken[c.conclusion]) {
      taken[c.conclusion] = true;
      kept.push_back(std::move(c));
    }
  }
  // A premise equal to the conclusion subsumes the whole node.
  for (Derivation& c : kept)
    if (c.conclusion == d.conclusion) return std::move(c);
  if (kept.size() == 1 && kept[0].conclusion == d.conclusion) return std::move(kept[0]);
  d.children = std::move(kept);
  return d;
}

}  // namespace xordy

#endif  // XORDY_DERIVATION_HPP
