#ifndef XORDY_SEARCH_HPP
#define XORDY_SEARCH_HPP

// K-bounded insecurity search: deterministic enumeration over session
// sets, interleavings and small candidate substitutions, with receive
// pruning, witness minimization and optional worker parallelism.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "xordy/protocol.hpp"
#include "xordy/transforms.hpp"

namespace xordy {

struct SearchConfig {
  std::size_t max_sessions = 1;                 // K
  std::optional<std::size_t> size_bound;        // default: |C| of the candidate context
  std::optional<double> timeout_seconds;
  unsigned jobs = 1;
};

struct AttackWitness {
  RunContext context;      // the found (xi, sigma) run, with proofs
  Substitution sigma_star;
  RunContext minimized;    // re-validated run under sigma*
  std::size_t c_size = 0;  // |C| of the witness context
  std::size_t size_bound = 0;
};

enum class SearchStatus { NoAttack, Attack, Timeout };

struct SearchResult {
  SearchStatus status = SearchStatus::NoAttack;
  std::optional<AttackWitness> witness;
};

namespace detail {

inline constexpr TermId kNoSkip = static_cast<TermId>(-1);

// |A u B| (minus `skip`) with early abort past `limit`; inputs sorted by id.
inline std::size_t union_count(const std::vector<TermId>& A, const std::vector<TermId>& B,
                               std::size_t limit, TermId skip = kNoSkip) {
  std::size_t n = 0, i = 0, j = 0;
  while (i < A.size() || j < B.size()) {
    TermId x;
    if (i < A.size() && (j >= B.size() || A[i] <= B[j])) {
      x = A[i];
      if (j < B.size() && A[i] == B[j]) ++j;
      ++i;
    } else {
      x = B[j];
      ++j;
    }
    if (x == skip) continue;
    if (++n > limit) return limit + 1;
  }
  return n;
}

inline std::vector<TermId> union_merge(const std::vector<TermId>& A,
                                       const std::vector<TermId>& B) {
  std::vector<TermId> out;
  out.reserve(A.size() + B.size());
  std::set_union(A.begin(), A.end(), B.begin(), B.end(), std::back_inserter(out));
  return out;
}

// All ground normalized terms over the atom pool with at most `budget`
// subterms outside `base` (a sorted, subterm-closed set). These are exactly
// the possible values of a variable once the other values already occupy
// |base| of the dag-size target; the set stays tiny for small budgets.
inline std::vector<TermId> budget_terms(TermArena& a, const std::vector<TermId>& base,
                                        std::span<const TermId> atoms, std::size_t budget) {
  static const std::vector<TermId> kEmptyVec;

  std::vector<TermId> pool;
  std::vector<std::size_t> cost;
  std::vector<TermId> maxfac;
  std::unordered_set<TermId> seen;

  // #elements of (st-union of A and B, minus skip) outside base, aborting
  // past limit. All vectors sorted by id.
  auto out_count = [&](const std::vector<TermId>& A, const std::vector<TermId>& B,
                       std::size_t limit, TermId skip) -> std::size_t {
    std::size_t n = 0, i = 0, j = 0, k = 0;
    while (i < A.size() || j < B.size()) {
      TermId x;
      if (i < A.size() && (j >= B.size() || A[i] <= B[j])) {
        x = A[i];
        if (j < B.size() && A[i] == B[j]) ++j;
        ++i;
      } else {
        x = B[j];
        ++j;
      }
      if (x == skip) continue;
      while (k < base.size() && base[k] < x) ++k;
      if (k < base.size() && base[k] == x) continue;
      if (++n > limit) return limit + 1;
    }
    return n;
  };

  auto add = [&](TermId t) {
    if (!seen.insert(t).second) return;
    std::size_t c = out_count(a.subterms(t), kEmptyVec, budget, kNoSkip);
    if (c > budget) return;
    pool.push_back(t);
    cost.push_back(c);
    auto fs = a.factors(t);
    TermId mf = fs[0];
    for (TermId f : fs)
      if (a.compare(mf, f) < 0) mf = f;
    maxfac.push_back(mf);
  };

  add(a.zero());
  for (TermId t : base) add(t);
  for (TermId t : atoms) add(t);

  // Xor chain step prefix (+) ext, factors ascending. A non-standard
  // prefix's top node is erased by the extension, so its own
  // outside-of-base cost does not propagate; it is skipped from the union.
  auto chain = [&](std::size_t pi, std::size_t ei) {
    TermId p = pool[pi], e = pool[ei];
    if (!a.is_standard(e) || e == a.zero() || p == a.zero()) return;
    if (cost[ei] + 1 > budget) return;  // st(ext) lands fully in the result
    if (a.is_standard(p) && cost[pi] + 1 > budget) return;
    if (a.compare(maxfac[pi], e) >= 0) return;
    std::size_t xc = out_count(a.subterms(p), a.subterms(e), budget == 0 ? 0 : budget - 1,
                               a.is_standard(p) ? kNoSkip : p);
    if (xc + 1 <= budget) add(a.xor_of({p, e}));
  };

  for (std::size_t i = 0; i < pool.size(); ++i) {
    TermId u = pool[i];
    if (a.is_key_atom(u) && cost[i] + 1 <= budget) add(a.pk(u));
    for (std::size_t j = 0; j <= i; ++j) {
      TermId v = pool[j];
      // pair/senc/aenc: both operands land fully in the result's subterms.
      if (cost[i] + 1 <= budget && cost[j] + 1 <= budget) {
        std::size_t oc =
            out_count(a.subterms(u), a.subterms(v), budget == 0 ? 0 : budget - 1, kNoSkip);
        if (oc + 1 <= budget) {
          add(a.pair(u, v));
          add(a.senc(u, v));
          if (a.shape(v) == Shape::Pk) add(a.aenc(u, v));
          if (j != i) {
            add(a.pair(v, u));
            add(a.senc(v, u));
            if (a.shape(u) == Shape::Pk) add(a.aenc(v, u));
          }
        }
      }
      chain(i, j);
      if (j != i) chain(j, i);
    }
  }
  return pool;
}

}  // namespace detail

// All ground normalized terms over an atom pool (plus 0) whose dag-size
// stays within the bound, sorted by (dag-size, canonical order).
//
// Composite sizes are computed from the children's cached subterm sets
// *before* interning, so rejected candidates cost a short sorted merge and
// never touch the arena. Two structural facts keep the pair loop off the
// (numerous) maximal terms: a pair/senc/aenc with an operand of size
// bound-1 fits only if the partner is one of its subterms, and an xor of
// size bound extends only by its own subterms.
// Thrown (and caught inside the search) when a deadline interrupts an
// operation without its own early-exit path.
struct SearchInterrupted {};

class TermEnumerator {
 public:
  TermEnumerator(TermArena& a, std::span<const TermId> atoms, std::size_t bound,
                 std::size_t cap = 2'000'000, const std::function<bool()>* stop = nullptr)
      : a_(a), bound_(bound < 1 ? 1 : bound), cap_(cap) {
    add(a.zero());
    for (TermId t : atoms) add(t);
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (stop && (i & 255u) == 0 && (*stop)()) throw SearchInterrupted{};
      process(i);
    }

    std::vector<std::size_t> order(terms_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
      if (sizes_[p] != sizes_[q]) return sizes_[p] < sizes_[q];
      return a.compare(terms_[p], terms_[q]) < 0;
    });
    std::vector<TermId> ts;
    std::vector<std::size_t> ss;
    for (std::size_t i : order) {
      ts.push_back(terms_[i]);
      ss.push_back(sizes_[i]);
    }
    terms_ = std::move(ts);
    sizes_ = std::move(ss);
    index_.clear();
    for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
  }

  const std::vector<TermId>& terms() const { return terms_; }
  std::size_t size_of(std::size_t idx) const { return sizes_[idx]; }

  // Position of t in the sorted term list; t must be in the space.
  std::size_t position_of(TermId t) const {
    auto it = index_.find(t);
    if (it == index_.end()) throw std::logic_error("term outside the enumerated space");
    return it->second;
  }

 private:
  void add(TermId t) {
    if (index_.count(t)) return;
    std::size_t s = a_.dag_size(t);
    if (s > bound_) return;
    index_.emplace(t, terms_.size());
    if (s + 1 <= bound_) small_.push_back(terms_.size());
    terms_.push_back(t);
    sizes_.push_back(s);
    standard_.push_back(a_.is_standard(t));
    auto fs = a_.factors(t);
    TermId mf = fs[0];
    for (TermId f : fs)
      if (a_.compare(mf, f) < 0) mf = f;
    maxfac_.push_back(mf);
    if (terms_.size() > cap_) throw std::runtime_error("candidate term space too large");
  }

  void pair_likes(TermId u, TermId v) {
    add(a_.pair(u, v));
    add(a_.senc(u, v));
    if (a_.shape(v) == Shape::Pk) add(a_.aenc(u, v));
  }

  // Chain step prefix (+) ext; ext must be a standard non-zero term
  // canonically above the prefix's greatest factor (so every xor is built
  // exactly once, factors ascending).
  void try_xor(std::size_t pi, std::size_t ei) {
    TermId prefix = terms_[pi], ext = terms_[ei];
    if (!standard_[ei] || ext == a_.zero() || prefix == a_.zero()) return;
    std::size_t sp = sizes_[pi], se = sizes_[ei];
    if (se + 1 > bound_) return;
    // A standard prefix contributes all of st(prefix) to the result.
    if (standard_[pi] && sp + 1 > bound_) return;
    if (standard_[pi] && sp == bound_ - 1 && se == bound_ - 1) return;  // needs st(ext) inside st(prefix)
    std::size_t base = detail::union_count(a_.subterms(prefix), a_.subterms(ext), bound_ - 1,
                                           standard_[pi] ? detail::kNoSkip : prefix);
    if (base + 1 > bound_) return;
    if (a_.compare(maxfac_[pi], ext) >= 0) return;
    add(a_.xor_of({prefix, ext}));
  }

  void process(std::size_t i) {
    TermId u = terms_[i];
    std::size_t su = sizes_[i];
    if (a_.is_key_atom(u) && su + 1 <= bound_) add(a_.pk(u));

    // Subterm-partner fast paths for maximal operands.
    if (su + 1 == bound_ || (su == bound_ && !standard_[i])) {
      std::vector<TermId> stu = a_.subterms(u);  // copy: adds below mutate the cache
      for (TermId p : stu) {
        auto it = index_.find(p);
        if (it == index_.end()) continue;  // atoms outside the pool's base set
        std::size_t pj = it->second;
        if (su + 1 == bound_) {
          pair_likes(u, p);
          if (p != u) pair_likes(p, u);
        }
        try_xor(i, pj);
        if (pj != i) try_xor(pj, i);
      }
    }
    if (su + 1 > bound_) return;

    // General loop over composable (size <= bound-1) partners seen so far.
    std::size_t nsmall = small_.size();
    for (std::size_t k = 0; k < nsmall; ++k) {
      std::size_t j = small_[k];
      if (j > i) break;
      std::size_t sv = sizes_[j];
      if (su + 2 <= bound_ && sv + 2 <= bound_) {
        TermId v = terms_[j];
        std::size_t un = detail::union_count(a_.subterms(u), a_.subterms(v), bound_ - 1);
        if (un + 1 <= bound_) {
          pair_likes(u, v);
          if (j != i) pair_likes(v, u);
        }
      }
      // With a standard prefix the whole prefix (resp. its partner) lands in
      // the result's subterms, so a size bound-1 operand forces the other to
      // be one of its subterms -- those pairs come from the fast path above.
      // An xor prefix's top node is erased, so no such shortcut applies.
      bool maximal = su + 1 == bound_ || sv + 1 == bound_;
      if (!(standard_[i] && maximal)) try_xor(i, j);
      if (j != i && !(standard_[j] && maximal)) try_xor(j, i);
    }
  }

  TermArena& a_;
  std::size_t bound_;
  std::size_t cap_;
  std::vector<TermId> terms_;
  std::vector<std::size_t> sizes_;
  std::vector<bool> standard_;
  std::vector<TermId> maxfac_;
  std::vector<std::size_t> small_;  // indices with size <= bound-1
  std::unordered_map<TermId, std::size_t> index_;
};

// Streams every ground normalized substitution over `vars` with values
// drawn from the enumerated term space, by iterative deepening on the
// total dag-size of the value set, then lexicographically. The callback
// may return false to stop.
inline void candidate_substitutions(TermArena& a, std::span<const TermId> vars,
                                    std::span<const TermId> atoms, std::size_t bound,
                                    const std::function<bool(const Substitution&)>& fn) {
  if (bound < 1) throw std::invalid_argument("candidate_substitutions: bound must be >= 1");
  if (vars.empty()) {
    fn(Substitution{});
    return;
  }
  std::vector<TermId> vs(vars.begin(), vars.end());
  std::sort(vs.begin(), vs.end(), [&](TermId p, TermId q) { return a.compare(p, q) < 0; });

  TermEnumerator en(a, atoms, bound);
  const auto& terms = en.terms();

  bool stop = false;
  Substitution cur;
  std::vector<TermId> chosen;

  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t vi, std::size_t target) {
    if (stop) return;
    if (vi == vs.size()) {
      if (a.dag_size(std::span<const TermId>(chosen)) == target) {
        if (!fn(cur)) stop = true;
      }
      return;
    }
    for (std::size_t ti = 0; ti < terms.size() && !stop; ++ti) {
      chosen.push_back(terms[ti]);
      if (a.dag_size(std::span<const TermId>(chosen)) <= target) {
        cur.bind(vs[vi], terms[ti]);
        rec(vi + 1, target);
      }
      chosen.pop_back();
    }
  };

  for (std::size_t target = 1; target <= bound && !stop; ++target) rec(0, target);
}

// All multisets of at most K sessions: role choice times agent map over
// the declared-agent + I pool, fresh-renamed per session id. Emitted in
// (count, lexicographic alternative index) order.
inline void enumerate_session_sets(TermArena& a, const Protocol& prot, std::size_t k,
                                   const std::function<bool(const std::vector<Session>&)>& fn) {
  struct Alternative {
    std::size_t role;
    Substitution agent_map;
  };
  std::vector<TermId> pool = prot.agent_names;
  if (std::find(pool.begin(), pool.end(), a.intruder()) == pool.end())
    pool.push_back(a.intruder());

  std::vector<Alternative> alts;
  for (std::size_t r = 0; r < prot.roles.size(); ++r) {
    std::vector<TermId> avars = prot.roles[r].agent_vars(a);
    std::sort(avars.begin(), avars.end(), [&](TermId p, TermId q) { return a.compare(p, q) < 0; });
    std::vector<std::size_t> pick(avars.size(), 0);
    while (true) {
      Substitution m;
      for (std::size_t i = 0; i < avars.size(); ++i) m.bind(avars[i], pool[pick[i]]);
      alts.push_back(Alternative{r, std::move(m)});
      std::size_t i = avars.size();
      while (i > 0 && ++pick[i - 1] == pool.size()) pick[--i] = 0;
      if (i == 0) break;
    }
  }

  bool stop = false;
  std::vector<std::size_t> combo;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t left) {
    if (stop) return;
    std::vector<Session> sessions;
    bool ok = true;
    for (std::size_t i = 0; i < combo.size(); ++i) {
      auto s = instantiate(a, prot, alts[combo[i]].role, alts[combo[i]].agent_map, i + 1);
      if (!s) {
        ok = false;
        break;
      }
      sessions.push_back(std::move(*s));
    }
    if (ok) {
      if (!fn(sessions)) {
        stop = true;
        return;
      }
    }
    if (left == 0) return;
    for (std::size_t i = start; i < alts.size() && !stop; ++i) {
      combo.push_back(i);
      rec(i, left - 1);
      combo.pop_back();
    }
  };
  rec(0, k);
}

namespace detail {

inline std::vector<TermId> protocol_atoms(TermArena& a, const Protocol& prot) {
  std::vector<TermId> gen = prot.initial_knowledge;
  for (const Role& r : prot.roles) {
    gen.insert(gen.end(), r.knowledge.begin(), r.knowledge.end());
    for (const RoleStep& st : r.steps) {
      gen.push_back(st.recv);
      gen.push_back(st.send);
    }
  }
  gen.push_back(a.secret());
  gen.insert(gen.end(), prot.agent_names.begin(), prot.agent_names.end());
  gen.push_back(a.intruder());
  gen.push_back(a.zero());
  std::vector<TermId> st = a.subterms_of(gen);
  std::vector<TermId> atoms;
  for (TermId t : st)
    if (a.is_atom(t) && !a.is_variable(t)) atoms.push_back(t);
  std::sort(atoms.begin(), atoms.end(), [&](TermId p, TermId q) { return a.compare(p, q) < 0; });
  return atoms;
}

// |C| of a candidate branch, computed before substitution (variables stand
// for themselves). This is the default substitution size bound.
inline std::size_t candidate_c_size(TermArena& a, const Protocol& prot,
                                    const std::vector<Session>& sessions,
                                    const std::vector<RoleStep>& steps) {
  std::vector<TermId> gen = prot.initial_knowledge;
  for (const Session& s : sessions) gen.insert(gen.end(), s.knowledge.begin(), s.knowledge.end());
  for (const RoleStep& st : steps) {
    gen.push_back(st.recv);
    gen.push_back(st.send);
  }
  gen.push_back(a.secret());
  return a.dag_size(gen);
}

struct Branch {
  std::vector<Session> sessions;
  std::vector<TraceRef> trace;
};

struct BranchSearcher {
  TermArena& a;
  const Protocol& prot;
  const std::vector<TermId>& atoms;
  std::optional<std::size_t> cfg_bound;
  std::chrono::steady_clock::time_point deadline;
  bool has_deadline = false;

  bool timed_out = false;

  // Caches shared across branches and deepening targets: size bounds,
  // ground knowledge sets and receive shapes repeat heavily between
  // interleavings, so the expensive work (term enumeration, saturation,
  // per-receive candidate filtering) happens once per distinct key.
  std::map<std::size_t, std::unique_ptr<TermEnumerator>> enum_cache;
  std::map<std::vector<TermId>, std::unique_ptr<KnowledgeOracle>> oracle_cache;
  // (bound, receive template with one open variable, ground knowledge) ->
  // ascending enumerator indices whose value makes the receive derivable.
  std::map<std::tuple<std::size_t, TermId, std::vector<TermId>>, std::vector<std::uint32_t>>
      allowed_cache;

  bool deadline_hit() {
    if (has_deadline && std::chrono::steady_clock::now() > deadline) {
      timed_out = true;
      return true;
    }
    return false;
  }

  TermEnumerator& enumerator(std::size_t bound) {
    auto it = enum_cache.find(bound);
    if (it == enum_cache.end()) {
      std::function<bool()> stop = [this] { return deadline_hit(); };
      it = enum_cache
               .emplace(bound, std::make_unique<TermEnumerator>(a, atoms, bound,
                                                                std::size_t{2'000'000}, &stop))
               .first;
    }
    return *it->second;
  }

  KnowledgeOracle& oracle(std::vector<TermId> know) {
    std::sort(know.begin(), know.end());
    know.erase(std::unique(know.begin(), know.end()), know.end());
    auto it = oracle_cache.find(know);
    if (it == oracle_cache.end())
      it = oracle_cache.emplace(know, std::make_unique<KnowledgeOracle>(a, know)).first;
    return *it->second;
  }

  // Enumerator indices (ascending, hence in sweep order) whose term makes
  // recv derivable from know when substituted for var. Null on deadline.
  const std::vector<std::uint32_t>* allowed_list(std::size_t bound, TermId recv, TermId var,
                                                 std::vector<TermId> know) {
    std::sort(know.begin(), know.end());
    know.erase(std::unique(know.begin(), know.end()), know.end());
    auto key = std::make_tuple(bound, recv, std::move(know));
    if (auto it = allowed_cache.find(key); it != allowed_cache.end()) return &it->second;
    KnowledgeOracle& ora = oracle(std::get<2>(key));
    const auto& terms = enumerator(bound).terms();
    std::vector<std::uint32_t> out;
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
      if ((ti & 4095u) == 0 && deadline_hit()) return nullptr;
      Substitution one;
      one.bind(var, terms[ti]);
      if (ora.derivable(apply(a, recv, one))) out.push_back(static_cast<std::uint32_t>(ti));
    }
    return &allowed_cache.emplace(std::move(key), std::move(out)).first->second;
  }

  // Searches one (session set, interleaving) branch; returns the first
  // attack in deterministic substitution order, if any.
  std::optional<AttackWitness> run(const Branch& br) {
    try {
      return run_impl(br);
    } catch (const SearchInterrupted&) {
      timed_out = true;
      return std::nullopt;
    }
  }

  std::optional<AttackWitness> run_impl(const Branch& br) {
    std::vector<RoleStep> steps;
    for (const TraceRef& r : br.trace) {
      const RoleStep& st = br.sessions[r.session].steps[r.step];
      steps.push_back(st);
    }
    std::size_t bound = cfg_bound.value_or(candidate_c_size(a, prot, br.sessions, steps));
    if (bound < 1) bound = 1;

    // Trace variables ordered by first-use step, then canonically; the
    // receive at step i becomes checkable once all its variables are set.
    std::vector<TermId> vars;
    std::vector<std::size_t> check_after(steps.size(), 0);  // #vars needed per step
    {
      std::set<TermId> seen;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        std::vector<TermId> fresh;
        for (TermId v : a.vars(steps[i].recv))
          if (seen.insert(v).second) fresh.push_back(v);
        for (TermId v : a.vars(steps[i].send))
          if (seen.insert(v).second) fresh.push_back(v);
        std::sort(fresh.begin(), fresh.end(),
                  [&](TermId p, TermId q) { return a.compare(p, q) < 0; });
        vars.insert(vars.end(), fresh.begin(), fresh.end());
        check_after[i] = vars.size();
      }
    }

    // Steps grouped by the variable level that completes them.
    std::vector<std::vector<std::size_t>> newly(vars.size());
    std::vector<std::size_t> ground_steps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (check_after[i] == 0)
        ground_steps.push_back(i);
      else
        newly[check_after[i] - 1].push_back(i);
    }

    // Knowledge available before step i: X0 plus the earlier sends.
    auto knowledge_before = [&](std::size_t i, const Substitution& sigma) {
      std::vector<TermId> know = prot.initial_knowledge;
      for (std::size_t j = 0; j < i; ++j) know.push_back(apply(a, steps[j].send, sigma));
      return know;
    };

    // Variable-free receives hold or fail independently of sigma.
    for (std::size_t i : ground_steps) {
      if (deadline_hit()) return std::nullopt;
      if (!oracle(knowledge_before(i, Substitution{})).derivable(steps[i].recv))
        return std::nullopt;
    }

    // When every send is ground, the final intruder knowledge does not
    // depend on sigma: if it cannot reach the secret, no run of this
    // branch is an attack.
    {
      bool sends_ground = true;
      for (const RoleStep& st : steps)
        if (!a.vars(st.send).empty()) {
          sends_ground = false;
          break;
        }
      if (sends_ground) {
        if (deadline_hit()) return std::nullopt;
        if (!oracle(knowledge_before(steps.size(), Substitution{})).derivable(a.secret()))
          return std::nullopt;
      }
    }

    std::optional<AttackWitness> found;

    auto try_complete = [&](const Substitution& sigma) -> bool {
      ValidateError err;
      auto ctx = validate_run(a, prot, br.sessions, br.trace, sigma, &err);
      if (!ctx) return false;
      if (!is_attack(a, *ctx)) return false;
      MinimizedAttack min = minimize_attack(a, *ctx);
      AttackWitness w;
      w.c_size = ctx->c_set.size();
      w.size_bound = bound;
      w.context = std::move(*ctx);
      w.sigma_star = std::move(min.sigma_star);
      w.minimized = std::move(min.context);
      found = std::move(w);
      return true;
    };

    if (vars.empty()) {
      if (deadline_hit()) return std::nullopt;
      try_complete(Substitution{});
      return found;
    }

    TermEnumerator& en = enumerator(bound);
    const auto& terms = en.terms();
    Substitution cur;

    // Budget below which candidates are generated structurally from the
    // already-chosen subterms instead of sweeping the whole term list.
    constexpr std::size_t kStructuralBudget = 2;

    std::function<bool(std::size_t, const std::vector<TermId>&, std::size_t)> rec =
        [&](std::size_t vi, const std::vector<TermId>& chosen_st, std::size_t target) -> bool {
      if (timed_out || deadline_hit()) return true;
      if (vi == vars.size()) {
        if (chosen_st.size() != target) return false;
        return try_complete(cur);
      }
      cur.unbind(vars[vi]);  // drop any stale binding from a sibling subtree
      std::size_t budget = target - chosen_st.size();
      bool structural = budget <= kStructuralBudget;

      // Filter through the first receive this level completes (its earlier
      // sends are already ground under cur).
      const std::vector<std::uint32_t>* allowed = nullptr;
      KnowledgeOracle* filter = nullptr;
      TermId filter_recv = 0;
      const std::vector<std::size_t>& here = newly[vi];
      std::size_t extra_from = 0;  // here[extra_from..] re-checked per candidate
      if (!here.empty()) {
        std::size_t i0 = here.front();
        TermId recv0 = apply(a, steps[i0].recv, cur);
        std::vector<TermId> know = knowledge_before(i0, cur);
        if (a.vars(recv0).empty()) {
          if (!oracle(std::move(know)).derivable(recv0)) return false;
        } else if (structural) {
          filter = &oracle(std::move(know));
          filter_recv = recv0;
        } else {
          allowed = allowed_list(bound, recv0, vars[vi], std::move(know));
          if (!allowed) return true;  // deadline
        }
        extra_from = 1;
      }

      // Tries one candidate value; returns true when the search is over.
      auto consider = [&](TermId w) -> bool {
        if (filter) {
          Substitution one;
          one.bind(vars[vi], w);
          if (!filter->derivable(apply(a, filter_recv, one))) return false;
        }
        cur.bind(vars[vi], w);
        bool ok = true;
        for (std::size_t s = extra_from; s < here.size() && ok; ++s) {
          std::size_t i = here[s];
          ok = derivable(a, knowledge_before(i, cur), apply(a, steps[i].recv, cur));
        }
        if (ok && rec(vi + 1, union_merge(chosen_st, a.subterms(w)), target)) return true;
        return timed_out;
      };

      if (structural) {
        // Candidates fitting the remaining budget, tried in sweep order.
        std::vector<TermId> cands =
            budget == 0 ? chosen_st : budget_terms(a, chosen_st, atoms, budget);
        std::vector<std::pair<std::size_t, TermId>> ordered;
        ordered.reserve(cands.size());
        for (TermId w : cands) ordered.emplace_back(en.position_of(w), w);
        std::sort(ordered.begin(), ordered.end());
        for (std::size_t k = 0; k < ordered.size(); ++k) {
          if ((k & 255u) == 0 && deadline_hit()) return true;
          if (consider(ordered[k].second)) return true;
        }
      } else {
        std::size_t n = allowed ? allowed->size() : terms.size();
        for (std::size_t k = 0; k < n; ++k) {
          if ((k & 1023u) == 0 && deadline_hit()) return true;
          std::size_t ti = allowed ? (*allowed)[k] : k;
          if (en.size_of(ti) > target) break;  // sizes ascend with the index
          TermId w = terms[ti];
          if (union_count(chosen_st, a.subterms(w), target) > target) continue;
          if (consider(w)) return true;
        }
      }
      cur.unbind(vars[vi]);
      return false;
    };

    for (std::size_t target = 1; target <= bound; ++target) {
      if (rec(0, {}, target)) break;
      if (timed_out) break;
    }
    return timed_out ? std::nullopt : found;
  }
};

}  // namespace detail

// Deterministic realization of the nondeterministic guess: nested
// enumeration ordered (session sets, interleavings, substitutions by
// iterative deepening). The reported witness is identical across runs and
// worker counts.
inline SearchResult find_attack(TermArena& a, const Protocol& prot, const SearchConfig& cfg) {
  for (const Role& r : prot.roles) {
    if (!well_formed(a, r).ok) throw std::invalid_argument("protocol has an ill-formed role");
  }

  std::vector<TermId> atoms = detail::protocol_atoms(a, prot);

  std::vector<detail::Branch> branches;
  enumerate_session_sets(a, prot, cfg.max_sessions, [&](const std::vector<Session>& sessions) {
    std::vector<std::size_t> lengths;
    for (const Session& s : sessions) lengths.push_back(s.steps.size());
    for_each_interleaving(lengths, [&](const std::vector<TraceRef>& seq) {
      branches.push_back(detail::Branch{sessions, seq});
      return true;
    });
    return true;
  });

  auto deadline = std::chrono::steady_clock::time_point{};
  bool has_deadline = false;
  if (cfg.timeout_seconds) {
    deadline = std::chrono::steady_clock::now() +
               std::chrono::microseconds(static_cast<long long>(*cfg.timeout_seconds * 1e6));
    has_deadline = true;
  }

  unsigned jobs = cfg.jobs == 0 ? 1 : cfg.jobs;
  if (jobs <= 1 || branches.size() <= 1) {
    detail::BranchSearcher searcher{a, prot, atoms, cfg.size_bound, deadline, has_deadline};
    for (const detail::Branch& br : branches) {
      if (auto w = searcher.run(br)) return SearchResult{SearchStatus::Attack, std::move(w)};
      if (searcher.timed_out) return SearchResult{SearchStatus::Timeout, std::nullopt};
    }
    return SearchResult{SearchStatus::NoAttack, std::nullopt};
  }

  // Parallel: workers claim branches in order; the least branch index with
  // an attack wins, so the result matches the single-threaded search.
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> best_idx{branches.size()};
  std::atomic<bool> any_timeout{false};
  std::mutex best_mu;
  std::optional<AttackWitness> best;

  auto worker = [&]() {
    detail::BranchSearcher searcher{a, prot, atoms, cfg.size_bound, deadline, has_deadline};
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= branches.size()) return;
      if (i > best_idx.load()) continue;
      searcher.timed_out = false;
      auto w = searcher.run(branches[i]);
      if (searcher.timed_out) {
        any_timeout.store(true);
        return;
      }
      if (w) {
        std::lock_guard lk(best_mu);
        if (i < best_idx.load()) {
          best_idx.store(i);
          best = std::move(w);
        }
      }
    }
  };

  std::vector<std::thread> threads;
  for (unsigned i = 0; i < jobs; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  if (best) return SearchResult{SearchStatus::Attack, std::move(best)};
  if (any_timeout.load()) return SearchResult{SearchStatus::Timeout, std::nullopt};
  return SearchResult{SearchStatus::NoAttack, std::nullopt};
}

}  // namespace xordy

#endif  // XORDY_SEARCH_HPP
