// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Usage: xordy-acceptance <path-to-cli> <fixtures-dir>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "support/brute.hpp"
#include "support/fixtures.hpp"
#include "support/gen.hpp"
#include "support/oracle.hpp"
#include "support/properties.hpp"
#include "xordy/parse.hpp"
#include "xordy/search.hpp"
#include "xordy/transforms.hpp"

using namespace xordy;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string g_cli;
std::string g_fixtures;

bool report(int n, const std::string& what, bool ok, const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << n << "] " << what;
  if (!ok && !detail.empty()) std::cout << " -- " << detail;
  std::cout << std::endl;
  return ok;
}

// Criteria 1 and 4 share one pass over the random derivability instances:
// oracle agreement, then the structural witness checks.
struct OracleOutcome {
  bool agree = true;
  bool witnesses_ok = true;
  double elapsed = 0.0;
  std::string detail;
};

OracleOutcome run_oracle_suite() {
  OracleOutcome out;
  auto t0 = Clock::now();
  TermArena a;
  testgen::Rng rng(20260823);
  testgen::TermGen tg{a, rng};
  for (int i = 0; i < 1000; ++i) {
    testgen::DeduceInstance inst = testgen::random_instance(a, rng, tg, 13);
    DeduceResult got = derive(a, inst.x, inst.goal);
    std::vector<TermId> closure = naive_closure(a, inst.x, inst.st);
    bool want = std::binary_search(closure.begin(), closure.end(), inst.goal);
    if (got.derivable != want) {
      out.agree = false;
      out.detail = "instance " + std::to_string(i) + " disagrees";
      break;
    }
    if (got.derivable) {
      const Derivation& d = *got.witness;
      if (!check_derivation(a, d, inst.x).ok || !is_normal(a, d) ||
          !testgen::check_subterm_property(a, d, inst.x, inst.goal) ||
          !testgen::check_lrxor(a, d)) {
        out.witnesses_ok = false;
        out.detail = "witness " + std::to_string(i) + " fails a structural check";
      }
    }
  }
  out.elapsed = seconds_since(t0);
  return out;
}

bool criterion_2() {
  TermArena a;
  testgen::Rng rng(20260824);
  testgen::TermGen tg{a, rng};
  for (int i = 0; i < 10000; ++i) {
    RawTerm raw = tg.raw(3);
    TermId t = normalize(a, raw);
    if (normalize(a, testgen::to_raw(a, t)) != t) return false;       // idempotence
    if (normalize(a, testgen::scramble(rng, raw)) != t) return false;  // AC invariance
    if (a.xor_of({t, t}) != a.zero()) return false;                    // nilpotence
    if (a.xor_of({t, a.zero()}) != t) return false;                    // unit
  }
  return true;
}

bool criterion_3() {
  TermArena a;
  testgen::Rng rng(20260825);
  testgen::TermGen tg{a, rng};
  tg.with_vars = true;
  for (int i = 0; i < 1000; ++i) {
    std::vector<TermId> parts;
    std::size_t n = 1 + rng.below(4);
    for (std::size_t j = 0; j < n; ++j) parts.push_back(tg.standard_term(2));
    Substitution sigma = tg.ground_subst(parts, 2);

    // Part 1: substitution commutes with xor normalization.
    std::vector<TermId> mapped;
    for (TermId p : parts) mapped.push_back(apply(a, p, sigma));
    if (apply(a, a.xor_of(parts), sigma) != a.xor_of(mapped)) return false;

    // Part 2: zap distributes over xor (on the grounded factors, against a
    // random typed set).
    TypedSet typed;
    for (TermId u : a.subterms_of(mapped))
      if (a.is_standard(u) && !a.is_atom(u) && rng.chance(0.5))
        for (TermId s : a.subterms(u))
          if (a.is_standard(s) && !a.is_atom(s)) typed.terms.insert(s);
    std::vector<TermId> zapped;
    for (TermId p : mapped) zapped.push_back(zap(a, p, typed));
    if (zap(a, a.xor_of(mapped), typed) != a.xor_of(zapped)) return false;
  }
  return true;
}

bool criterion_5() {
  TermArena a;
  testgen::Rng rng(20260826);
  testgen::TermGen tg{a, rng};
  testgen::DerivGen dg{a, rng, tg};
  for (int i = 0; i < 1000; ++i) {
    auto [x, d] = dg.random_derivation();
    if (!check_derivation(a, d, x).ok) return false;  // generator sanity
    Derivation nd = normalize_derivation(a, d);
    if (!is_normal(a, nd)) return false;
    if (nd.conclusion != d.conclusion) return false;
    if (nd.node_count() > d.node_count()) return false;
    if (!check_derivation(a, nd, x).ok) return false;
  }
  return true;
}

bool criterion_6(std::string& detail) {
  struct Fixture {
    const char* file;
    std::size_t sessions;
    std::size_t bound;
  };
  const Fixture fixtures[] = {
      {"p1.xordy", 1, 4}, {"p3.xordy", 2, 4}, {"p4.xordy", 2, 5}, {"p5.xordy", 2, 4}};
  for (const Fixture& f : fixtures) {
    TermArena a;
    ParseResult pr = parse_protocol(a, testgen::read_fixture(f.file));
    if (!pr.ok()) {
      detail = std::string(f.file) + " failed to parse";
      return false;
    }
    SearchConfig cfg;
    cfg.max_sessions = f.sessions;
    cfg.size_bound = f.bound;
    SearchResult res = find_attack(a, *pr.protocol, cfg);
    if (res.status != SearchStatus::Attack) {
      detail = std::string(f.file) + ": no attack found";
      return false;
    }
    AttackWitness& w = *res.witness;
    if (!is_attack(a, w.minimized)) {
      detail = std::string(f.file) + ": sigma* run is not an attack";
      return false;
    }
    if (w.sigma_star.dag_size(a) > w.c_size) {
      detail = std::string(f.file) + ": sigma* exceeds |C|";
      return false;
    }
    if (!testgen::check_zap_commutation(a, w.context, w.sigma_star) ||
        !testgen::check_receive_origin(a, w.context) ||
        !testgen::check_receive_origin(a, w.minimized)) {
      detail = std::string(f.file) + ": a run-level lemma check failed";
      return false;
    }
  }
  return true;
}

int run_cli(const std::string& args) {
  std::string cmd = "'" + g_cli + "' " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WEXITSTATUS(rc);
}

bool criterion_7(std::string& detail) {
  auto t0 = Clock::now();
  int p1 = run_cli("verify '" + g_fixtures + "/p1.xordy' --sessions 1");
  double p1_time = seconds_since(t0);
  if (p1 != 2) {
    detail = "p1 verify exit code " + std::to_string(p1) + " (want 2)";
    return false;
  }
  if (p1_time >= 1.0) {
    detail = "p1 verify took " + std::to_string(p1_time) + "s (budget 1s)";
    return false;
  }

  t0 = Clock::now();
  int p2 = run_cli("verify '" + g_fixtures + "/p2.xordy' --sessions 2");
  double p2_time = seconds_since(t0);
  if (p2 != 0) {
    detail = "p2 verify exit code " + std::to_string(p2) + " (want 0)";
    return false;
  }
  if (p2_time >= 60.0) {
    detail = "p2 verify took " + std::to_string(p2_time) + "s (budget 60s)";
    return false;
  }

  // Verdicts match an independent brute-force search (at explicit bounds
  // keeping its unpruned candidate space tractable).
  {
    TermArena a;
    ParseResult pr = parse_protocol(a, testgen::read_fixture("p1.xordy"));
    if (!pr.ok() || !testgen::brute_force_attack(a, *pr.protocol, 1, 4)) {
      detail = "brute force misses the p1 attack";
      return false;
    }
  }
  {
    TermArena a;
    ParseResult pr = parse_protocol(a, testgen::read_fixture("p2.xordy"));
    if (!pr.ok() || testgen::brute_force_attack(a, *pr.protocol, 2, 3)) {
      detail = "brute force claims a p2 attack";
      return false;
    }
  }
  return true;
}

bool criterion_8(std::string& detail) {
  TermArena a;
  TermId k = a.key("k");
  TermId t = a.secret();
  for (int i = 0; i < 498; ++i) t = a.senc(t, k);
  std::vector<TermId> x{t, k};
  std::vector<TermId> all = x;
  all.push_back(a.secret());
  std::size_t st = a.subterms_of(all).size();
  if (st != 500) {
    detail = "|st| is " + std::to_string(st) + ", expected 500";
    return false;
  }
  auto t0 = Clock::now();
  DeduceResult res = derive(a, x, a.secret());
  double elapsed = seconds_since(t0);
  if (!res.derivable) {
    detail = "secret not derived";
    return false;
  }
  if (elapsed >= 5.0) {
    detail = "took " + std::to_string(elapsed) + "s (budget 5s)";
    return false;
  }
  return check_derivation(a, *res.witness, x).ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: xordy-acceptance <path-to-cli> <fixtures-dir>" << std::endl;
    return 2;
  }
  g_cli = argv[1];
  g_fixtures = argv[2];

  bool all = true;
  std::string detail;

  OracleOutcome oracle = run_oracle_suite();
  all &= report(1, "oracle equivalence on 1000 random derivability instances (< 60 s)",
                oracle.agree && oracle.elapsed < 60.0,
                oracle.agree ? "took " + std::to_string(oracle.elapsed) + "s" : oracle.detail);
  all &= report(2, "normal-form algebra laws on 10000 random raw terms", criterion_2());
  all &= report(3, "substitution/zap xor-distribution on 1000 (multiset, sigma) pairs",
                criterion_3());
  all &= report(4, "subterm property and xor-node structure on every oracle witness",
                oracle.witnesses_ok, oracle.detail);
  all &= report(5, "proof normalization on 1000 random valid derivations", criterion_5());
  detail.clear();
  all &= report(6, "run-level theorem suite on every fixture attack", criterion_6(detail), detail);
  detail.clear();
  all &= report(7, "end-to-end verdicts on P1/P2 match the brute force within budget",
                criterion_7(detail), detail);
  detail.clear();
  all &= report(8, "derivability at |st| = 500 completes within 5 s", criterion_8(detail), detail);

  return all ? 0 : 1;
}
