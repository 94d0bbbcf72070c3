#ifndef XORDY_TRANSFORMS_HPP
#define XORDY_TRANSFORMS_HPP

// Run-relative typed-term machinery: the typed set nf(D sigma), zap,
// the small substitution sigma*, proof translation under substitution,
// typed proofs and attack minimization.

#include <optional>
#include <unordered_set>
#include <vector>

#include "xordy/derivation.hpp"
#include "xordy/protocol.hpp"
#include "xordy/term.hpp"

namespace xordy {

struct TypedSet {
  std::unordered_set<TermId> terms;  // nf(D sigma): standard, normalized, ground
  bool contains(TermId t) const { return terms.count(t) != 0; }
};

// 0 is always typed: it is derivable from nothing (the nullary xor rule),
// so proofs concluding 0 never need an originating receive and zap leaves
// it fixed anyway.
inline TypedSet typed_set(TermArena& a, const RunContext& ctx) {
  TypedSet t;
  t.terms.insert(a.zero());
  for (TermId d : ctx.d_set) t.terms.insert(apply(a, d, ctx.sigma));
  return t;
}

// zap: atoms map to themselves, an untyped ("zappable") non-atomic
// standard term collapses to 0, anything else is rebuilt recursively and
// re-normalized.
inline TermId zap(TermArena& a, TermId t, const TypedSet& typed) {
  if (!a.is_ground(t)) throw std::invalid_argument("zap: term must be ground");
  const TermNode& n = a.node(t);
  if (n.shape == Shape::Atom) return t;
  if (n.shape == Shape::Xor) {
    std::vector<TermId> parts;
    parts.reserve(n.children.size());
    for (TermId f : n.children) parts.push_back(zap(a, f, typed));
    return a.xor_of(parts);
  }
  if (!typed.contains(t)) return a.zero();
  switch (n.shape) {
    case Shape::Pk:
      return t;  // key child is an atom
    case Shape::Pair:
      return a.pair(zap(a, n.children[0], typed), zap(a, n.children[1], typed));
    case Shape::Senc:
      return a.senc(zap(a, n.children[0], typed), zap(a, n.children[1], typed));
    case Shape::Aenc: {
      TermId k = zap(a, n.children[1], typed);
      if (a.shape(k) != Shape::Pk)
        throw std::logic_error("zap: typed aenc with untyped pk key");
      return a.aenc(zap(a, n.children[0], typed), k);
    }
    default: break;
  }
  throw std::logic_error("zap: bad shape");
}

// sigma*: zap sigma pointwise, same domain.
inline Substitution sigma_star(TermArena& a, const Substitution& sigma, const TypedSet& typed) {
  Substitution out;
  for (auto [v, t] : sigma.entries()) out.bind(v, zap(a, t, typed));
  return out;
}

// Relabels every node (s, r) as (nf(s sigma), r); the tree shape and the
// rules are untouched, and the result is again a valid derivation.
inline Derivation translate_derivation(TermArena& a, const Derivation& d,
                                       const Substitution& sigma) {
  Derivation out;
  out.conclusion = apply(a, d.conclusion, sigma);
  out.rule = d.rule;
  out.children.reserve(d.children.size());
  for (const Derivation& c : d.children) out.children.push_back(translate_derivation(a, c, sigma));
  return out;
}

// Typed derivations: every subproof ends in a constructor, or concludes a
// typed term, or concludes a non-standard term.
inline bool is_typed_derivation(TermArena& a, const Derivation& d, const TypedSet& typed) {
  bool here = is_constructor(a, d) || typed.contains(d.conclusion) || !a.is_standard(d.conclusion);
  if (!here) return false;
  for (const Derivation& c : d.children)
    if (!is_typed_derivation(a, c, typed)) return false;
  return true;
}

namespace detail {

// Minimal subproof whose conclusion has t among its subterms (leftmost
// deepest such subproof).
inline const Derivation* minimal_subproof_containing(TermArena& a, const Derivation& d, TermId t) {
  const auto& st = a.subterms(d.conclusion);
  if (!std::binary_search(st.begin(), st.end(), t)) return nullptr;
  for (const Derivation& c : d.children)
    if (const Derivation* sub = minimal_subproof_containing(a, c, t)) return sub;
  return &d;
}

struct TypedNormalizer {
  TermArena& a;
  const RunContext& ctx;
  const TypedSet& typed;

  // Re-derive an untyped standard term at the earliest step whose received
  // message contains it, from the stored (normal) receive proof.
  Derivation earlier_proof(TermId t, std::size_t i) {
    for (std::size_t j = 1; j <= i && j <= ctx.trace.size(); ++j) {
      TermId recv_g = apply(a, ctx.trace[j - 1].recv, ctx.sigma);
      const auto& st = a.subterms(recv_g);
      if (!std::binary_search(st.begin(), st.end(), t)) continue;
      const Derivation* chi = minimal_subproof_containing(a, ctx.receive_proofs[j - 1], t);
      if (chi == nullptr || chi->conclusion != t)
        throw std::logic_error("typed_normalize: receive proof does not expose the term");
      return run(*chi, j - 1);
    }
    throw std::logic_error("typed_normalize: untyped term with no originating receive");
  }

  Derivation run(const Derivation& d, std::size_t i) {
    TermId t = d.conclusion;
    bool standard = a.is_standard(t);

    if ((d.rule == Rule::Ax || is_destructor(a, d)) && standard && !typed.contains(t))
      return earlier_proof(t, i);

    switch (d.rule) {
      case Rule::Ax:
        return d;
      case Rule::Pk:
      case Rule::Pair:
      case Rule::Senc:
      case Rule::Aenc: {
        Derivation out{t, d.rule, {}};
        out.children.reserve(d.children.size());
        for (const Derivation& c : d.children) out.children.push_back(run(c, i));
        return out;
      }
      case Rule::Split1:
      case Rule::Split2:
      case Rule::Sdec:
      case Rule::Adec: {
        Derivation major = run(d.children[0], i);
        if (is_constructor(a, major)) {
          // Extract the subproof of the matching component.
          switch (d.rule) {
            case Rule::Split1: return std::move(major.children[0]);
            case Rule::Split2: return std::move(major.children[1]);
            case Rule::Sdec:
            case Rule::Adec: return std::move(major.children[0]);
            default: break;
          }
        }
        Derivation out{t, d.rule, {}};
        out.children.push_back(std::move(major));
        if (d.children.size() > 1) out.children.push_back(run(d.children[1], i));
        return normalize_derivation(a, std::move(out));
      }
      case Rule::Xor: {
        std::vector<Derivation> kids;
        kids.reserve(d.children.size());
        for (const Derivation& c : d.children) kids.push_back(run(c, i));
        if (!standard) {
          // xor_c: constructor occurrence, just rebuild and re-normalize.
          return normalize_derivation(a, Derivation{t, Rule::Xor, std::move(kids)});
        }
        // xor_d: rebuild over the non-xor-ended grandchildren.
        std::vector<Derivation> parts;
        for (Derivation& k : kids) {
          if (k.rule == Rule::Xor) {
            for (Derivation& g : k.children) parts.push_back(std::move(g));
          } else {
            parts.push_back(std::move(k));
          }
        }
        for (Derivation& p : parts)
          if (p.conclusion == t) return std::move(p);
        return normalize_derivation(a, Derivation{t, Rule::Xor, std::move(parts)});
      }
    }
    throw std::logic_error("typed_normalize: bad rule");
  }
};

}  // namespace detail

// Turns a normal derivation of nf(X_i sigma) |- t into a typed normal one
// with the same conclusion, re-deriving untyped destructor-ended subproofs
// from earlier receive proofs of the validated run.
inline Derivation typed_normalize(TermArena& a, const Derivation& d, const RunContext& ctx,
                                  std::size_t i) {
  TypedSet t = typed_set(a, ctx);
  detail::TypedNormalizer tn{a, ctx, t};
  Derivation out = normalize_derivation(a, tn.run(d, i));
  if (out.conclusion != d.conclusion)
    throw std::logic_error("typed_normalize: conclusion changed");
  if (!is_normal(a, out) || !is_typed_derivation(a, out, t))
    throw std::logic_error("typed_normalize: result is not typed normal");
  return out;
}

struct MinimizedAttack {
  Substitution sigma_star;
  RunContext context;  // re-validated under sigma*
};

// Executable reading of the simulation theorem: zap the substitution,
// re-validate the run from scratch, and re-check the secret.
inline MinimizedAttack minimize_attack(TermArena& a, const RunContext& ctx) {
  TypedSet t = typed_set(a, ctx);
  Substitution small = sigma_star(a, ctx.sigma, t);
  std::vector<TraceRef> refs;
  for (const RunStep& st : ctx.trace) refs.push_back(st.ref);
  ValidateError err;
  auto revalidated = validate_run(a, *ctx.protocol, ctx.sessions, refs, small, &err);
  if (!revalidated)
    throw std::logic_error("minimize_attack: sigma* run failed to validate at step " +
                           std::to_string(err.failed_step));
  if (!is_attack(a, *revalidated))
    throw std::logic_error("minimize_attack: sigma* run lost the attack");
  return MinimizedAttack{std::move(small), std::move(*revalidated)};
}

}  // namespace xordy

#endif  // XORDY_TRANSFORMS_HPP
