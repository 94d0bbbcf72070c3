#ifndef XORDY_PROTOCOL_HPP
#define XORDY_PROTOCOL_HPP

// Roles, protocols, sessions, interleavings, run validation and the
// attack predicate.

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xordy/deduce.hpp"
#include "xordy/term.hpp"

namespace xordy {

struct RoleStep {
  TermId recv;
  TermId send;
};

struct Role {
  std::string name;
  std::vector<TermId> knowledge;  // standard normalized terms
  std::vector<RoleStep> steps;

  // Agent variables: first occurrence in a send. Everything else in the
  // role is an intruder variable.
  std::vector<TermId> agent_vars(TermArena& a) const {
    std::vector<TermId> out;
    std::set<TermId> seen_recv;
    std::set<TermId> found;
    for (const RoleStep& st : steps) {
      for (TermId v : a.vars(st.recv)) seen_recv.insert(v);
      for (TermId v : a.vars(st.send))
        if (!seen_recv.count(v) && found.insert(v).second) out.push_back(v);
    }
    return out;
  }

  std::vector<TermId> intruder_vars(TermArena& a) const {
    std::set<TermId> agent;
    for (TermId v : agent_vars(a)) agent.insert(v);
    std::vector<TermId> out;
    std::set<TermId> found;
    for (const RoleStep& st : steps) {
      for (TermId v : a.vars(st.recv))
        if (!agent.count(v) && found.insert(v).second) out.push_back(v);
      for (TermId v : a.vars(st.send))
        if (!agent.count(v) && found.insert(v).second) out.push_back(v);
    }
    return out;
  }
};

struct Protocol {
  std::string name;
  std::vector<TermId> initial_knowledge;  // X0: normalized ground terms
  std::vector<Role> roles;
  std::vector<TermId> agent_names;  // declared agent pool (I is implicit)
};

struct WellFormedReport {
  bool ok = true;
  bool knowledge_vars_ok = true;          // vars(X) within the agent variables
  std::vector<std::size_t> underivable;   // 1-based failing step indices
};

// Def. of well-formed roles: vars(X) within vars_a, and every send
// derivable from X plus the receives so far.
inline WellFormedReport well_formed(TermArena& a, const Role& role) {
  WellFormedReport rep;
  std::set<TermId> agent;
  for (TermId v : role.agent_vars(a)) agent.insert(v);
  for (TermId t : role.knowledge)
    for (TermId v : a.vars(t))
      if (!agent.count(v)) {
        rep.knowledge_vars_ok = false;
        rep.ok = false;
      }
  std::vector<TermId> known = role.knowledge;
  for (std::size_t i = 0; i < role.steps.size(); ++i) {
    known.push_back(role.steps[i].recv);
    if (!derivable(a, known, role.steps[i].send)) {
      rep.underivable.push_back(i + 1);
      rep.ok = false;
    }
  }
  return rep;
}

struct Session {
  std::size_t role_index = 0;
  std::size_t session_id = 0;
  Substitution tau;                  // agent vars -> names, intruder vars -> fresh variables
  std::vector<TermId> knowledge;     // role knowledge under tau
  std::vector<RoleStep> steps;       // role steps under tau
};

namespace detail {
// "rho tau consists of normalized terms": tau maps atoms to atoms, so the
// only way normalization can kick in is an xor group whose factors collapse
// (become equal, or the name 0) under tau.
inline bool subst_keeps_normal(TermArena& a, TermId t, const Substitution& tau) {
  const TermNode& n = a.node(t);
  if (n.shape == Shape::Xor) {
    std::set<TermId> images;
    for (TermId f : n.children) {
      TermId img = apply(a, f, tau);
      if (img == a.zero()) return false;
      if (!a.is_standard(img)) return false;
      if (!images.insert(img).second) return false;
      if (!subst_keeps_normal(a, f, tau)) return false;
    }
    return true;
  }
  for (TermId c : n.children)
    if (!subst_keeps_normal(a, c, tau)) return false;
  return true;
}
}  // namespace detail

struct InstantiateError {
  std::string message;
};

// Builds a session: agent_map must assign names to exactly the agent
// variables; intruder variables are renamed v#session_id, which keeps any
// two sessions with distinct ids coherent.
inline std::optional<Session> instantiate(TermArena& a, const Protocol& prot,
                                          std::size_t role_index,
                                          const Substitution& agent_map,
                                          std::size_t session_id,
                                          InstantiateError* err = nullptr) {
  const Role& role = prot.roles.at(role_index);
  auto fail = [&](std::string m) -> std::optional<Session> {
    if (err) err->message = std::move(m);
    return std::nullopt;
  };
  std::vector<TermId> avars = role.agent_vars(a);
  if (agent_map.size() != avars.size()) return fail("agent map domain mismatch");
  Substitution tau;
  for (TermId v : avars) {
    if (!agent_map.contains(v)) return fail("agent map missing a variable");
    TermId img = agent_map.lookup(v);
    const TermNode& n = a.node(img);
    if (n.shape != Shape::Atom || n.kind == AtomKind::Variable)
      return fail("agent map must assign names");
    tau.bind(v, img);
  }
  for (TermId v : role.intruder_vars(a))
    tau.bind(v, a.variable(a.label(v) + "#" + std::to_string(session_id)));

  for (const RoleStep& st : role.steps) {
    if (!detail::subst_keeps_normal(a, st.recv, tau) ||
        !detail::subst_keeps_normal(a, st.send, tau))
      return fail("instantiation breaks term normalization");
  }
  for (TermId t : role.knowledge)
    if (!detail::subst_keeps_normal(a, t, tau)) return fail("instantiation breaks term normalization");

  Session s;
  s.role_index = role_index;
  s.session_id = session_id;
  s.tau = tau;
  for (TermId t : role.knowledge) s.knowledge.push_back(apply(a, t, tau));
  for (const RoleStep& st : role.steps)
    s.steps.push_back(RoleStep{apply(a, st.recv, tau), apply(a, st.send, tau)});
  return s;
}

inline bool coherent(TermArena& a, const Session& s1, const Session& s2) {
  std::set<TermId> v1;
  for (const RoleStep& st : s1.steps) {
    for (TermId v : a.vars(st.recv)) v1.insert(v);
    for (TermId v : a.vars(st.send)) v1.insert(v);
  }
  for (const RoleStep& st : s2.steps) {
    for (TermId v : a.vars(st.recv))
      if (v1.count(v)) return false;
    for (TermId v : a.vars(st.send))
      if (v1.count(v)) return false;
  }
  return true;
}

// One element of a trace: step `step` of session `session`.
struct TraceRef {
  std::size_t session;
  std::size_t step;
  bool operator==(const TraceRef&) const = default;
};

// Emits every prefix of every interleaving exactly once, in lexicographic
// (DFS preorder) order of session indices, starting with the empty trace.
// The callback may return false to stop early.
inline void for_each_interleaving(std::span<const std::size_t> lengths,
                                  const std::function<bool(const std::vector<TraceRef>&)>& fn) {
  std::vector<std::size_t> used(lengths.size(), 0);
  std::vector<TraceRef> cur;
  bool stop = false;
  std::function<void()> rec = [&]() {
    if (stop) return;
    if (!fn(cur)) {
      stop = true;
      return;
    }
    for (std::size_t s = 0; s < lengths.size() && !stop; ++s) {
      if (used[s] < lengths[s]) {
        cur.push_back(TraceRef{s, used[s]});
        ++used[s];
        rec();
        --used[s];
        cur.pop_back();
      }
    }
  };
  rec();
}

inline std::vector<std::vector<TraceRef>> interleavings(std::span<const std::size_t> lengths) {
  std::vector<std::vector<TraceRef>> out;
  for_each_interleaving(lengths, [&](const std::vector<TraceRef>& seq) {
    out.push_back(seq);
    return true;
  });
  return out;
}

struct RunStep {
  TraceRef ref;
  TermId recv;  // tau-instantiated, before sigma
  TermId send;
};

// A validated run: knowledge sets, the Section-3 universes C and D, and
// one stored normal derivation per receive.
struct RunContext {
  const Protocol* protocol = nullptr;
  std::vector<Session> sessions;
  std::vector<RunStep> trace;
  Substitution sigma;

  std::vector<std::vector<TermId>> knowledge;        // X_0 .. X_n (before sigma)
  std::vector<std::vector<TermId>> knowledge_subst;  // nf(X_i sigma)
  std::vector<TermId> c_set;                         // C, sorted
  std::vector<TermId> d_set;                         // D, sorted
  std::vector<Derivation> receive_proofs;            // normal, one per step
  std::optional<Derivation> secret_proof;

  bool in_c(TermId t) const { return std::binary_search(c_set.begin(), c_set.end(), t); }
  bool in_d(TermId t) const { return std::binary_search(d_set.begin(), d_set.end(), t); }
};

struct ValidateError {
  std::size_t failed_step = 0;  // 1-based; 0 = precondition failure
  std::string message;
};

inline std::optional<RunContext> validate_run(TermArena& a, const Protocol& prot,
                                              std::vector<Session> sessions,
                                              std::span<const TraceRef> trace,
                                              const Substitution& sigma,
                                              ValidateError* err = nullptr) {
  auto fail = [&](std::size_t at, std::string m) -> std::optional<RunContext> {
    if (err) *err = ValidateError{at, std::move(m)};
    return std::nullopt;
  };

  RunContext ctx;
  ctx.protocol = &prot;
  ctx.sessions = std::move(sessions);
  ctx.sigma = sigma;

  std::set<TermId> trace_vars;
  for (const TraceRef& r : trace) {
    const Session& s = ctx.sessions.at(r.session);
    const RoleStep& st = s.steps.at(r.step);
    ctx.trace.push_back(RunStep{r, st.recv, st.send});
    for (TermId v : a.vars(st.recv)) trace_vars.insert(v);
    for (TermId v : a.vars(st.send)) trace_vars.insert(v);
  }
  for (TermId v : trace_vars)
    if (!sigma.contains(v)) return fail(0, "sigma does not cover vars(trace)");
  for (auto [v, t] : sigma.entries()) {
    if (!trace_vars.count(v)) return fail(0, "sigma maps a variable outside the trace");
    if (!a.is_ground(t)) return fail(0, "sigma is not ground");
  }

  ctx.knowledge.push_back(prot.initial_knowledge);
  ctx.knowledge_subst.push_back(apply(a, prot.initial_knowledge, sigma));
  for (std::size_t i = 0; i < ctx.trace.size(); ++i) {
    const RunStep& st = ctx.trace[i];
    TermId recv_g = apply(a, st.recv, sigma);
    DeduceResult r = derive(a, ctx.knowledge_subst[i], recv_g);
    if (!r.derivable) return fail(i + 1, "receive not derivable");
    ctx.receive_proofs.push_back(std::move(*r.witness));
    std::vector<TermId> next = ctx.knowledge.back();
    next.push_back(st.send);
    std::vector<TermId> next_g = ctx.knowledge_subst.back();
    next_g.push_back(apply(a, st.send, sigma));
    std::sort(next_g.begin(), next_g.end());
    next_g.erase(std::unique(next_g.begin(), next_g.end()), next_g.end());
    ctx.knowledge.push_back(std::move(next));
    ctx.knowledge_subst.push_back(std::move(next_g));
  }

  // C = st(X0 u (U_i X_i tau_i) u {r_1, s_1, ..., r_n, s_n, secret}),
  // D = its standard non-variable members.
  std::vector<TermId> c_gen = prot.initial_knowledge;
  for (const Session& s : ctx.sessions)
    c_gen.insert(c_gen.end(), s.knowledge.begin(), s.knowledge.end());
  for (const RunStep& st : ctx.trace) {
    c_gen.push_back(st.recv);
    c_gen.push_back(st.send);
  }
  c_gen.push_back(a.secret());
  ctx.c_set = a.subterms_of(c_gen);
  for (TermId t : ctx.c_set)
    if (a.is_standard(t) && !a.is_variable(t)) ctx.d_set.push_back(t);

  return ctx;
}

// Attack predicate: the secret is derivable from the final knowledge.
inline bool is_attack(TermArena& a, RunContext& ctx) {
  DeduceResult r = derive(a, ctx.knowledge_subst.back(), a.secret());
  if (!r.derivable) return false;
  ctx.secret_proof = std::move(r.witness);
  return true;
}

}  // namespace xordy

#endif  // XORDY_PROTOCOL_HPP
