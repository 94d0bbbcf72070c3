#ifndef XORDY_DEDUCE_HPP
#define XORDY_DEDUCE_HPP

// Intruder derivability: saturation within st(X u {t}), the GF(2) span
// check behind the xor rule, witness reconstruction, and a brute-force
// closure oracle for testing.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "xordy/derivation.hpp"
#include "xordy/term.hpp"

namespace xordy {

// Incremental GF(2) span over a fixed universe of standard terms.
// Each term is a bit vector over the standard non-zero terms of the
// universe (an xor term is the sum of its factors, the term 0 is the zero
// vector). Generators can be added one at a time; membership queries
// return the generating subset.
class XorSpan {
 public:
  XorSpan(TermArena& a, std::span<const TermId> universe) : arena_(a) {
    for (TermId t : universe)
      if (a.is_standard(t) && t != a.zero()) {
        if (col_.emplace(t, cols_).second) ++cols_;
      }
    words_ = (cols_ + 63) / 64;
  }

  void add_generator(TermId y) {
    Row r;
    r.bits = vec(y);
    r.combo.assign((gens_.size() + 64) / 64, 0);
    set_bit(r.combo, gens_.size());
    gens_.push_back(y);
    for (const Row& b : basis_) {
      if (b.pivot < cols_ && get_bit(r.bits, b.pivot)) xor_into(r, b);
    }
    r.pivot = first_bit(r.bits);
    if (r.pivot < cols_) basis_.push_back(std::move(r));
  }

  // Subset M of the generators with u = nf(xor M), if u is in the span.
  std::optional<std::vector<TermId>> combination(TermId u) const {
    Row r;
    r.bits = vec(u);
    r.combo.assign((gens_.size() + 63) / 64, 0);
    for (const Row& b : basis_) {
      if (b.pivot < cols_ && get_bit(r.bits, b.pivot)) xor_into(r, b);
    }
    if (first_bit(r.bits) < cols_) return std::nullopt;
    std::vector<TermId> subset;
    for (std::size_t i = 0; i < gens_.size(); ++i)
      if (get_bit(r.combo, i)) subset.push_back(gens_[i]);
    return subset;
  }

  bool contains(TermId u) const { return combination(u).has_value(); }

 private:
  struct Row {
    std::vector<std::uint64_t> bits;
    std::vector<std::uint64_t> combo;
    std::size_t pivot = SIZE_MAX;
  };

  std::vector<std::uint64_t> vec(TermId t) const {
    std::vector<std::uint64_t> v(words_, 0);
    for (TermId f : arena_.factors(t)) {
      if (f == arena_.zero()) continue;
      auto it = col_.find(f);
      if (it == col_.end()) throw std::invalid_argument("term outside the span universe");
      set_bit(v, it->second);
    }
    return v;
  }

  static void set_bit(std::vector<std::uint64_t>& v, std::size_t i) {
    v[i / 64] |= (1ULL << (i % 64));
  }
  static bool get_bit(const std::vector<std::uint64_t>& v, std::size_t i) {
    return i / 64 < v.size() && (v[i / 64] >> (i % 64)) & 1;
  }
  std::size_t first_bit(const std::vector<std::uint64_t>& v) const {
    for (std::size_t w = 0; w < v.size(); ++w)
      if (v[w]) return w * 64 + static_cast<std::size_t>(__builtin_ctzll(v[w]));
    return SIZE_MAX;
  }
  static void xor_into(Row& r, const Row& b) {
    for (std::size_t w = 0; w < b.bits.size(); ++w) r.bits[w] ^= b.bits[w];
    if (r.combo.size() < b.combo.size()) r.combo.resize(b.combo.size(), 0);
    for (std::size_t w = 0; w < b.combo.size(); ++w) r.combo[w] ^= b.combo[w];
  }

  TermArena& arena_;
  std::unordered_map<TermId, std::size_t> col_;
  std::size_t cols_ = 0;
  std::size_t words_ = 0;
  std::vector<TermId> gens_;
  std::vector<Row> basis_;
};

// Standalone M-subset query: M within Y with u = nf(xor M), over the
// st universe of Y u {u}.
inline std::optional<std::vector<TermId>> xor_combination(TermArena& a,
                                                          std::span<const TermId> y,
                                                          TermId u) {
  std::vector<TermId> all(y.begin(), y.end());
  all.push_back(u);
  auto st = a.subterms_of(all);
  XorSpan span(a, st);
  for (TermId g : y) span.add_generator(g);
  return span.combination(u);
}

struct SaturationResult {
  std::vector<TermId> closure;  // canonically sorted
  // How each non-axiom member entered the closure.
  struct Step {
    Rule rule;
    std::vector<TermId> premises;
  };
  std::unordered_map<TermId, Step> provenance;
  bool contains(TermId t) const {
    return std::binary_search(closure.begin(), closure.end(), t);
  }
};

// Fixpoint of one-step within st(X u {t}), starting from X.
// X |- t iff t ends up in the closure.
inline SaturationResult saturate(TermArena& a, std::span<const TermId> x, TermId goal) {
  std::vector<TermId> all(x.begin(), x.end());
  all.push_back(goal);
  std::vector<TermId> st = a.subterms_of(all);
  std::sort(st.begin(), st.end(), [&](TermId p, TermId q) { return a.compare(p, q) < 0; });

  SaturationResult res;
  std::unordered_set<TermId> y(x.begin(), x.end());
  XorSpan span(a, st);
  for (TermId g : x) span.add_generator(g);

  auto add = [&](TermId u, Rule r, std::vector<TermId> prem) {
    y.insert(u);
    span.add_generator(u);
    res.provenance.emplace(u, SaturationResult::Step{r, std::move(prem)});
  };

  bool changed = true;
  while (changed) {
    changed = false;

    for (TermId u : st) {
      if (y.count(u)) continue;
      const TermNode& n = a.node(u);
      std::optional<SaturationResult::Step> hit;
      switch (n.shape) {
        case Shape::Pk:
          if (y.count(n.children[0])) hit = {Rule::Pk, {n.children[0]}};
          break;
        case Shape::Pair:
          if (y.count(n.children[0]) && y.count(n.children[1]))
            hit = {Rule::Pair, {n.children[0], n.children[1]}};
          break;
        case Shape::Senc:
          if (y.count(n.children[0]) && y.count(n.children[1]))
            hit = {Rule::Senc, {n.children[0], n.children[1]}};
          break;
        case Shape::Aenc:
          if (y.count(n.children[0]) && y.count(n.children[1]))
            hit = {Rule::Aenc, {n.children[0], n.children[1]}};
          break;
        default: break;
      }
      if (hit) {
        add(u, hit->rule, std::move(hit->premises));
        changed = true;
      }
    }

    // Destructor steps: scan the members for decomposable shapes.
    for (TermId m : st) {
      if (!y.count(m)) continue;
      const TermNode& n = a.node(m);
      switch (n.shape) {
        case Shape::Pair:
          if (!y.count(n.children[0])) {
            add(n.children[0], Rule::Split1, {m});
            changed = true;
          }
          if (!y.count(n.children[1])) {
            add(n.children[1], Rule::Split2, {m});
            changed = true;
          }
          break;
        case Shape::Senc:
          if (y.count(n.children[1]) && !y.count(n.children[0])) {
            add(n.children[0], Rule::Sdec, {m, n.children[1]});
            changed = true;
          }
          break;
        case Shape::Aenc: {
          TermId k = a.node(n.children[1]).children[0];
          if (y.count(k) && !y.count(n.children[0])) {
            add(n.children[0], Rule::Adec, {m, k});
            changed = true;
          }
          break;
        }
        default: break;
      }
    }

    // xor stage: GF(2) span membership within st.
    for (TermId u : st) {
      if (y.count(u)) continue;
      if (auto combo = span.combination(u)) {
        add(u, Rule::Xor, std::move(*combo));
        changed = true;
      }
    }
  }

  for (TermId u : st)
    if (y.count(u)) res.closure.push_back(u);
  std::sort(res.closure.begin(), res.closure.end());
  return res;
}

// Fast repeated derivability queries against one fixed ground knowledge
// set. Saturation and the GF(2) span over st(X u {0}) are computed once;
// terms outside that universe are decided structurally: by the subterm
// property of normal proofs, a derivable term outside st(X) is concluded
// by a constructor, and every xor premise either lies in the saturated
// closure (covered by the span) or is a constructor-derivable factor of
// the goal. Agrees with derive()/saturate() on all inputs.
class KnowledgeOracle {
 public:
  KnowledgeOracle(TermArena& a, std::span<const TermId> x)
      : a_(a), sat_(saturate(a, x, a.zero())) {
    std::vector<TermId> all(x.begin(), x.end());
    all.push_back(a.zero());
    universe_ = a.subterms_of(all);
    span_.emplace(a, universe_);
    for (TermId m : sat_.closure) span_->add_generator(m);
  }

  bool derivable(TermId t) {
    if (sat_.contains(t)) return true;
    if (t < memo_.size() && memo_[t] != kUnknown) return memo_[t] == 1;
    bool res = false;
    const TermNode& n = a_.node(t);
    if (n.shape == Shape::Atom) {
      res = false;
    } else if (n.shape != Shape::Xor) {
      res = true;
      for (TermId c : n.children)
        if (!derivable(c)) {
          res = false;
          break;
        }
    } else {
      // Cancel the factors outside the universe (the span cannot reach
      // them, so they must be constructor-derivable premises); the rest
      // must be a combination of closure members.
      std::vector<TermId> parts{t};
      res = true;
      for (TermId f : n.children) {
        if (!std::binary_search(universe_.begin(), universe_.end(), f)) {
          if (!derivable(f)) {
            res = false;
            break;
          }
          parts.push_back(f);
        }
      }
      if (res) res = span_->contains(a_.xor_of(parts));
    }
    if (t >= memo_.size())
      memo_.resize(std::max<std::size_t>(t + 1, memo_.size() * 2), kUnknown);
    memo_[t] = res ? 1 : 0;
    return res;
  }

 private:
  static constexpr std::int8_t kUnknown = -1;

  TermArena& a_;
  SaturationResult sat_;
  std::vector<TermId> universe_;  // st(X u {0}), sorted by id
  std::optional<XorSpan> span_;
  std::vector<std::int8_t> memo_;  // indexed by TermId
};

struct DeduceResult {
  bool derivable = false;
  std::optional<Derivation> witness;  // normal, present iff derivable
};

namespace detail {
inline Derivation rebuild_witness(TermArena& a, const SaturationResult& sat,
                                  const std::unordered_set<TermId>& x, TermId t) {
  if (x.count(t)) return Derivation::ax(t);
  auto it = sat.provenance.find(t);
  if (it == sat.provenance.end()) throw std::logic_error("no provenance for saturated term");
  std::vector<Derivation> ch;
  ch.reserve(it->second.premises.size());
  for (TermId p : it->second.premises) ch.push_back(rebuild_witness(a, sat, x, p));
  return Derivation::make(t, it->second.rule, std::move(ch));
}
}  // namespace detail

// PTIME derivability with normal-witness reconstruction.
inline DeduceResult derive(TermArena& a, std::span<const TermId> x, TermId t) {
  SaturationResult sat = saturate(a, x, t);
  if (!sat.contains(t)) return {};
  std::unordered_set<TermId> xs(x.begin(), x.end());
  Derivation w = detail::rebuild_witness(a, sat, xs, t);
  w = normalize_derivation(a, std::move(w));
  return DeduceResult{true, std::move(w)};
}

inline bool derivable(TermArena& a, std::span<const TermId> x, TermId t) {
  return saturate(a, x, t).contains(t);
}

// Test oracle: blind closure of X under all rules, conclusions restricted
// to the given universe. The xor rule is handled by enumerating every
// subset of the current set (Gray code over the subset lattice), so the
// universe must stay small.
inline std::vector<TermId> naive_closure(TermArena& a, std::span<const TermId> x,
                                         std::span<const TermId> universe) {
  if (universe.size() > 16)
    throw std::invalid_argument("naive_closure: universe too large (> 16)");
  std::unordered_set<TermId> uni(universe.begin(), universe.end());
  std::unordered_set<TermId> y;
  for (TermId t : x)
    if (uni.count(t)) y.insert(t);

  auto consider = [&](TermId t) -> bool {
    if (uni.count(t) && !y.count(t)) {
      y.insert(t);
      return true;
    }
    return false;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<TermId> members(y.begin(), y.end());

    // Unary and binary rules by blind enumeration of premise tuples.
    for (TermId u : members) {
      const TermNode& n = a.node(u);
      if (n.shape == Shape::Pair) {
        changed |= consider(n.children[0]);
        changed |= consider(n.children[1]);
      }
      if (a.is_key_atom(u)) changed |= consider(a.pk(u));
      for (TermId v : members) {
        changed |= consider(a.pair(u, v));
        changed |= consider(a.senc(u, v));
        if (a.shape(v) == Shape::Pk) changed |= consider(a.aenc(u, v));
        if (n.shape == Shape::Senc && n.children[1] == v) changed |= consider(n.children[0]);
        if (n.shape == Shape::Aenc && a.node(n.children[1]).children[0] == v)
          changed |= consider(n.children[0]);
      }
    }

    // xor over every subset of the current members, including the empty
    // subset (which yields 0).
    TermId acc = a.zero();
    changed |= consider(acc);
    std::uint32_t gray = 0;
    std::uint64_t total = 1ULL << members.size();
    for (std::uint64_t i = 1; i < total; ++i) {
      std::uint32_t g = static_cast<std::uint32_t>(i ^ (i >> 1));
      std::uint32_t toggled = g ^ gray;
      gray = g;
      int idx = __builtin_ctz(toggled);
      acc = a.xor_of({acc, members[static_cast<std::size_t>(idx)]});
      changed |= consider(acc);
    }
  }

  std::vector<TermId> out(y.begin(), y.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace xordy

#endif  // XORDY_DEDUCE_HPP
