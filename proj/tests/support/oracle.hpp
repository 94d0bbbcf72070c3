#ifndef XORDY_TESTS_SUPPORT_ORACLE_HPP
#define XORDY_TESTS_SUPPORT_ORACLE_HPP

// Random derivability instances sized for the naive-closure oracle, plus
// the structural checks applied to every produced witness: the subterm
// property and the xor-premise observation.

#include <algorithm>
#include <vector>

#include "gen.hpp"
#include "xordy/deduce.hpp"

namespace testgen {

struct DeduceInstance {
  std::vector<TermId> x;
  TermId goal;
  std::vector<TermId> st;  // st(x u {goal}), sorted by id
};

// Knowledge sets of up to 6 terms (depth <= 3) over <= 8 atoms; instances
// are resampled until the joint subterm universe fits the naive oracle's
// xor power-set loop.
inline DeduceInstance random_instance(TermArena& a, Rng& rng, TermGen& tg,
                                      std::size_t max_universe) {
  for (;;) {
    DeduceInstance inst;
    std::size_t nx = 1 + rng.below(6);
    for (std::size_t i = 0; i < nx; ++i) inst.x.push_back(tg.term(3));
    std::sort(inst.x.begin(), inst.x.end());
    inst.x.erase(std::unique(inst.x.begin(), inst.x.end()), inst.x.end());

    std::vector<TermId> xst = a.subterms_of(inst.x);
    int roll = rng.chance(0.4) ? 0 : (rng.chance(0.4) ? 1 : 2);
    if (roll == 0 && !xst.empty()) {
      inst.goal = xst[rng.below(xst.size())];
    } else if (roll == 1 && !xst.empty()) {
      std::vector<TermId> parts;
      std::size_t n = 2 + rng.below(2);
      for (std::size_t i = 0; i < n; ++i) parts.push_back(xst[rng.below(xst.size())]);
      inst.goal = a.xor_of(parts);
    } else {
      inst.goal = tg.term(2);
    }

    std::vector<TermId> all = inst.x;
    all.push_back(inst.goal);
    inst.st = a.subterms_of(all);
    if (inst.st.size() <= max_universe) return inst;
  }
}

// terms(pi) within st(X u {t}); within st(X) when the proof ends in a
// destructor. 0 is exempt from the strengthening: an xor_d node may
// conclude 0 (cancellation, or the nullary proof of 0) without 0 occurring
// anywhere in X.
inline bool check_subterm_property(TermArena& a, const xordy::Derivation& d,
                                   std::span<const TermId> x, TermId t) {
  std::vector<TermId> all(x.begin(), x.end());
  all.push_back(t);
  std::vector<TermId> st_xt = a.subterms_of(all);
  for (TermId u : proof_terms(d))
    if (!std::binary_search(st_xt.begin(), st_xt.end(), u)) return false;
  if (is_destructor(a, d)) {
    std::vector<TermId> st_x = a.subterms_of(x);
    for (TermId u : proof_terms(d))
      if (u != a.zero() && !std::binary_search(st_x.begin(), st_x.end(), u)) return false;
  }
  return true;
}

namespace detail {
inline bool is_factor_of_nonstandard_premise(TermArena& a, const xordy::Derivation& d,
                                             TermId t) {
  for (const xordy::Derivation& c : d.children) {
    if (a.is_standard(c.conclusion)) continue;
    const auto& fs = a.node(c.conclusion).children;
    if (std::find(fs.begin(), fs.end(), t) != fs.end()) return true;
  }
  return false;
}
}  // namespace detail

// Structural conditions on every xor node of a normal proof: non-standard
// premises end in an axiom or a non-xor destructor; standard premises are
// factors of the conclusion (xor_c only) or of a non-standard premise; a
// standard non-zero xor_d conclusion is itself a factor of a non-standard
// premise. (A nullary xor concluding 0 satisfies everything vacuously.)
inline bool check_lrxor(TermArena& a, const xordy::Derivation& d) {
  if (d.rule == xordy::Rule::Xor) {
    bool conclusion_standard = a.is_standard(d.conclusion);
    for (const xordy::Derivation& c : d.children) {
      if (!a.is_standard(c.conclusion)) {
        switch (c.rule) {
          case xordy::Rule::Ax:
          case xordy::Rule::Split1:
          case xordy::Rule::Split2:
          case xordy::Rule::Sdec:
          case xordy::Rule::Adec:
            break;
          default:
            return false;
        }
      } else if (conclusion_standard) {
        if (!detail::is_factor_of_nonstandard_premise(a, d, c.conclusion)) return false;
      } else {
        const auto& fs = a.node(d.conclusion).children;
        if (std::find(fs.begin(), fs.end(), c.conclusion) == fs.end() &&
            !detail::is_factor_of_nonstandard_premise(a, d, c.conclusion))
          return false;
      }
    }
    if (conclusion_standard && d.conclusion != a.zero() &&
        !detail::is_factor_of_nonstandard_premise(a, d, d.conclusion))
      return false;
  }
  for (const xordy::Derivation& c : d.children)
    if (!check_lrxor(a, c)) return false;
  return true;
}

}  // namespace testgen

#endif  // XORDY_TESTS_SUPPORT_ORACLE_HPP
