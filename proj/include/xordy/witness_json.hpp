#ifndef XORDY_WITNESS_JSON_HPP
#define XORDY_WITNESS_JSON_HPP

// Machine-readable attack witnesses. The schema is stable and the output
// is byte-identical across runs for the same witness: terms are rendered
// in the surface syntax with xor factors in canonical order, keys keep
// insertion order (ordered_json), and proofs use the rule tags
// ax/split/sdec/adec/pk/pair/senc/aenc/xor.
//
// Requires the single-header nlohmann json ("json.hpp") on the include
// path; only CLI/test targets link this.

#include <string>

#include "json.hpp"
#include "xordy/print.hpp"
#include "xordy/search.hpp"

namespace xordy {

inline nlohmann::ordered_json proof_json(TermArena& a, const Derivation& d) {
  nlohmann::ordered_json j;
  j["conclusion"] = to_string(a, d.conclusion);
  j["rule"] = rule_name(d.rule);
  j["premises"] = nlohmann::ordered_json::array();
  for (const Derivation& c : d.children) j["premises"].push_back(proof_json(a, c));
  return j;
}

inline nlohmann::ordered_json subst_json(TermArena& a, const Substitution& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (auto [v, t] : s.entries()) j[a.label(v)] = to_string(a, t);
  return j;
}

inline nlohmann::ordered_json witness_json(TermArena& a, const AttackWitness& w) {
  const RunContext& ctx = w.context;
  nlohmann::ordered_json j;
  j["protocol"] = ctx.protocol->name;

  j["sessions"] = nlohmann::ordered_json::array();
  for (const Session& s : ctx.sessions) {
    nlohmann::ordered_json sj;
    sj["role"] = ctx.protocol->roles.at(s.role_index).name;
    sj["tau"] = subst_json(a, s.tau);
    j["sessions"].push_back(std::move(sj));
  }

  j["trace"] = nlohmann::ordered_json::array();
  for (const RunStep& st : ctx.trace) {
    nlohmann::ordered_json tj;
    tj["session"] = st.ref.session;
    tj["step"] = st.ref.step;
    tj["recv"] = to_string(a, apply(a, st.recv, ctx.sigma));
    tj["send"] = to_string(a, apply(a, st.send, ctx.sigma));
    j["trace"].push_back(std::move(tj));
  }

  j["sigma"] = subst_json(a, ctx.sigma);
  j["sigma_star"] = subst_json(a, w.sigma_star);

  j["proofs"] = nlohmann::ordered_json::array();
  for (const Derivation& p : ctx.receive_proofs) j["proofs"].push_back(proof_json(a, p));
  j["secret_proof"] =
      ctx.secret_proof ? proof_json(a, *ctx.secret_proof) : nlohmann::ordered_json(nullptr);

  j["c_size"] = w.c_size;
  j["size_bound"] = w.size_bound;
  return j;
}

inline std::string emit_witness_json(TermArena& a, const AttackWitness& w) {
  return witness_json(a, w).dump(2) + "\n";
}

}  // namespace xordy

#endif  // XORDY_WITNESS_JSON_HPP
