// xordy: symbolic protocol verifier for the Dolev-Yao intruder with xor.
//
// Subcommands:
//   nf <term>                              print the normal form
//   derive --knowledge <terms> --goal <t>  derivability decision (+ proof)
//   check <file>                           parse + well-formedness report
//   verify <file> --sessions K [...]       bounded attack search
//
// Exit codes: 0 completed / no attack, 2 attack found, 3 timeout,
// 1 usage or parse error. XORDY_TIMEOUT (seconds) is the default timeout
// for verify.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "xordy/parse.hpp"
#include "xordy/print.hpp"
#include "xordy/search.hpp"
#include "xordy/witness_json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAttack = 2;
constexpr int kExitTimeout = 3;

int parse_failure(const xordy::Diagnostic& d) {
  std::cerr << "error: " << d.str() << "\n";
  return kExitUsage;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_nf(const std::string& text) {
  xordy::TermArena a;
  try {
    xordy::TermId t = xordy::parse_term(a, text);
    std::cout << xordy::to_string(a, t) << "\n";
    return kExitOk;
  } catch (const xordy::detail::ParseError& e) {
    return parse_failure(e.diag);
  }
}

int cmd_derive(const std::string& knowledge, const std::string& goal, bool show_proof,
               bool as_json) {
  xordy::TermArena a;
  std::vector<xordy::TermId> x;
  xordy::TermId t;
  try {
    // One scope so identifier kinds agree between knowledge and goal.
    xordy::detail::SymbolScope scope;
    scope.standalone = true;
    xordy::detail::Parser p(a, knowledge, scope);
    x = p.parse_term_list();
    auto end = p.lex_.take();
    if (end.kind != xordy::detail::Token::Kind::End)
      p.err(end, "unexpected trailing input");
    xordy::detail::Parser pg(a, goal, p.scope_);
    t = pg.parse_term();
    end = pg.lex_.take();
    if (end.kind != xordy::detail::Token::Kind::End)
      pg.err(end, "unexpected trailing input");
  } catch (const xordy::detail::ParseError& e) {
    return parse_failure(e.diag);
  }

  xordy::DeduceResult r = xordy::derive(a, x, t);
  std::cout << (r.derivable ? "derivable" : "not derivable") << "\n";
  if (r.derivable && show_proof) {
    if (as_json) {
      std::cout << xordy::proof_json(a, *r.witness).dump(2) << "\n";
    } else {
      xordy::print_proof(a, *r.witness, std::cout);
    }
  }
  return kExitOk;
}

int cmd_check(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read '" << path << "'\n";
    return kExitUsage;
  }
  xordy::TermArena a;
  xordy::ParseResult res = xordy::parse_protocol(a, *text);
  if (!res.ok()) {
    for (const xordy::Diagnostic& d : res.diagnostics) std::cerr << "error: " << d.str() << "\n";
    return kExitUsage;
  }
  const xordy::Protocol& prot = *res.protocol;
  std::cout << "protocol " << prot.name << ": " << prot.roles.size() << " role(s), all well-formed\n";
  for (const xordy::Role& r : prot.roles) {
    std::cout << "  role " << r.name << ": " << r.steps.size()
              << " step(s); every send is derivable by the agent\n";
  }
  return kExitOk;
}

int cmd_verify(const std::string& path, std::size_t sessions,
               std::optional<std::size_t> size_bound, std::optional<double> timeout,
               unsigned jobs, bool as_json) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read '" << path << "'\n";
    return kExitUsage;
  }
  xordy::TermArena a;
  xordy::ParseResult res = xordy::parse_protocol(a, *text);
  if (!res.ok()) {
    for (const xordy::Diagnostic& d : res.diagnostics) std::cerr << "error: " << d.str() << "\n";
    return kExitUsage;
  }

  xordy::SearchConfig cfg;
  cfg.max_sessions = sessions;
  cfg.size_bound = size_bound;
  cfg.timeout_seconds = timeout;
  cfg.jobs = jobs;

  xordy::SearchResult sr = xordy::find_attack(a, *res.protocol, cfg);
  switch (sr.status) {
    case xordy::SearchStatus::Timeout:
      std::cout << "timeout\n";
      return kExitTimeout;
    case xordy::SearchStatus::NoAttack:
      std::cout << "no attack within bounds\n";
      return kExitOk;
    case xordy::SearchStatus::Attack:
      break;
  }

  const xordy::AttackWitness& w = *sr.witness;
  if (as_json) {
    std::cout << xordy::emit_witness_json(a, w);
    return kExitAttack;
  }

  const xordy::RunContext& ctx = w.context;
  std::cout << "attack found (" << ctx.sessions.size() << " session(s), "
            << ctx.trace.size() << " step(s))\n";
  for (const xordy::Session& s : ctx.sessions) {
    std::cout << "session " << s.session_id << ": role "
              << ctx.protocol->roles[s.role_index].name << "  tau = "
              << xordy::to_string(a, s.tau) << "\n";
  }
  std::cout << "trace:\n";
  for (const xordy::RunStep& st : ctx.trace) {
    std::cout << "  [s" << (st.ref.session + 1) << "." << (st.ref.step + 1) << "] recv "
              << xordy::to_string(a, xordy::apply(a, st.recv, ctx.sigma)) << " ; send "
              << xordy::to_string(a, xordy::apply(a, st.send, ctx.sigma)) << "\n";
  }
  std::cout << "sigma = " << xordy::to_string(a, ctx.sigma) << "\n";
  std::cout << "sigma* = " << xordy::to_string(a, w.sigma_star) << "\n";
  for (std::size_t i = 0; i < ctx.receive_proofs.size(); ++i) {
    std::cout << "proof of receive " << (i + 1) << ":\n";
    xordy::print_proof(a, ctx.receive_proofs[i], std::cout, 1);
  }
  if (ctx.secret_proof) {
    std::cout << "proof of the secret:\n";
    xordy::print_proof(a, *ctx.secret_proof, std::cout, 1);
  }
  return kExitAttack;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symbolic protocol verifier (Dolev-Yao with xor)"};
  app.require_subcommand(1);

  std::string nf_term;
  CLI::App* nf = app.add_subcommand("nf", "print the normal form of a term");
  nf->add_option("term", nf_term, "term in surface syntax")->required();

  std::string d_knowledge, d_goal;
  bool d_proof = false, d_json = false;
  CLI::App* derive = app.add_subcommand("derive", "decide X |- t");
  derive->add_option("--knowledge", d_knowledge, "comma-separated knowledge terms")->required();
  derive->add_option("--goal", d_goal, "goal term")->required();
  derive->add_flag("--proof", d_proof, "print a normal proof when derivable");
  derive->add_flag("--json", d_json, "print the proof as JSON");

  std::string c_file;
  CLI::App* check = app.add_subcommand("check", "parse a protocol and report well-formedness");
  check->add_option("file", c_file, "protocol file")->required();

  std::string v_file;
  std::size_t v_sessions = 1;
  std::optional<std::size_t> v_bound;
  std::optional<double> v_timeout;
  unsigned v_jobs = 1;
  bool v_json = false;
  CLI::App* verify = app.add_subcommand("verify", "bounded attack search");
  verify->add_option("file", v_file, "protocol file")->required();
  verify->add_option("--sessions", v_sessions, "session bound K")->required();
  verify->add_option("--size-bound", v_bound, "substitution dag-size bound (default |C|)");
  verify->add_option("--timeout", v_timeout, "timeout in seconds");
  verify->add_option("--jobs", v_jobs, "parallel workers");
  verify->add_flag("--json", v_json, "emit the witness as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (nf->parsed()) return cmd_nf(nf_term);
    if (derive->parsed()) return cmd_derive(d_knowledge, d_goal, d_proof, d_json);
    if (check->parsed()) return cmd_check(c_file);
    if (verify->parsed()) {
      if (!v_timeout) {
        if (const char* env = std::getenv("XORDY_TIMEOUT")) {
          try {
            v_timeout = std::stod(env);
          } catch (...) {
            std::cerr << "error: XORDY_TIMEOUT is not a number\n";
            return kExitUsage;
          }
        }
      }
      return cmd_verify(v_file, v_sessions, v_bound, v_timeout, v_jobs, v_json);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
