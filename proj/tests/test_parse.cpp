#include <catch2/catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include "support/fixtures.hpp"
#include "support/gen.hpp"
#include "xordy/parse.hpp"
#include "xordy/print.hpp"
#include "xordy/search.hpp"
#include "xordy/witness_json.hpp"

using namespace xordy;

namespace {

const char* kP1Source = R"(# one-time pad demo
protocol p1;
names: a;
knowledge: a;
secret: secret;

role R
  knows: secret;
  recv x;
  send x (+) secret;
)";

}  // namespace

TEST_CASE("parse_protocol: P1 source") {
  TermArena a;
  ParseResult res = parse_protocol(a, kP1Source);
  REQUIRE(res.ok());
  const Protocol& prot = *res.protocol;
  CHECK(prot.name == "p1");
  CHECK(prot.initial_knowledge == std::vector<TermId>{a.name("a")});
  REQUIRE(prot.roles.size() == 1);
  const Role& r = prot.roles[0];
  CHECK(r.name == "R");
  CHECK(r.knowledge == std::vector<TermId>{a.secret()});
  REQUIRE(r.steps.size() == 1);
  CHECK(r.steps[0].recv == a.variable("x"));
  CHECK(r.steps[0].send == a.xor_of({a.variable("x"), a.secret()}));
  CHECK(well_formed(a, r).ok);
}

TEST_CASE("parse_protocol: sends normalize, 0 is always derivable") {
  TermArena a;
  ParseResult res = parse_protocol(a,
                                   "protocol z;\n"
                                   "knowledge: 0;\n"
                                   "secret: secret;\n"
                                   "role R\n  recv x;\n  send x (+) x;\n");
  REQUIRE(res.ok());
  CHECK(res.protocol->roles[0].steps[0].send == a.zero());
}

TEST_CASE("parse_protocol: diagnostics") {
  TermArena a;

  // aenc key position must be pk(.); 1-based line/column point at the key.
  ParseResult bad_aenc = parse_protocol(a,
                                        "protocol z;\n"
                                        "names: m; keys: k;\n"
                                        "knowledge: aenc(m, k);\n"
                                        "secret: secret;\n"
                                        "role R\n  recv x;\n  send x;\n");
  REQUIRE_FALSE(bad_aenc.ok());
  REQUIRE(bad_aenc.diagnostics.size() == 1);
  CHECK(bad_aenc.diagnostics[0].message == "aenc key position must be pk(.)");
  CHECK(bad_aenc.diagnostics[0].line == 3);
  CHECK(bad_aenc.diagnostics[0].col == 20);

  // Undeclared identifiers are variables, which knowledge cannot contain.
  ParseResult nonground = parse_protocol(a,
                                         "protocol z;\n"
                                         "knowledge: a;\n"
                                         "secret: secret;\n"
                                         "role R\n  recv x;\n  send x;\n");
  REQUIRE_FALSE(nonground.ok());
  CHECK(nonground.diagnostics[0].message ==
        "knowledge terms must be ground (undeclared identifier?)");
  CHECK(nonground.diagnostics[0].line == 2);
  CHECK(nonground.diagnostics[0].col == 12);

  // Re-declaring a label with a different kind.
  ParseResult dup = parse_protocol(a,
                                   "protocol z;\nnames: b;\nkeys: b;\n"
                                   "knowledge: b;\nsecret: secret;\n"
                                   "role R\n  recv x;\n  send x;\n");
  REQUIRE_FALSE(dup.ok());
  CHECK(dup.diagnostics[0].message == "'b' already declared with a different kind");

  // secret override must name a declared name atom.
  ParseResult bad_secret = parse_protocol(a,
                                          "protocol z;\nnames: m; keys: kk;\n"
                                          "knowledge: m;\nsecret: kk;\n"
                                          "role R\n  recv x;\n  send x;\n");
  REQUIRE_FALSE(bad_secret.ok());
  CHECK(bad_secret.diagnostics[0].message == "secret override must be a declared name");

  // An underivable send surfaces as a well-formedness diagnostic.
  ParseResult illformed = parse_protocol(a,
                                         "protocol z;\nkeys: kw;\n"
                                         "knowledge: 0;\nsecret: secret;\n"
                                         "role R\n  recv x;\n  send kw;\n");
  REQUIRE_FALSE(illformed.ok());
  CHECK(illformed.diagnostics[0].message ==
        "role 'R' is not well-formed: send at step 1 is not derivable");

  // Diagnostics are deterministic across parses.
  ParseResult again = parse_protocol(a,
                                     "protocol z;\n"
                                     "names: m; keys: k;\n"
                                     "knowledge: aenc(m, k);\n"
                                     "secret: secret;\n"
                                     "role R\n  recv x;\n  send x;\n");
  REQUIRE(again.diagnostics.size() == 1);
  CHECK(again.diagnostics[0].str() == bad_aenc.diagnostics[0].str());
}

TEST_CASE("parse_protocol: secret override sugar") {
  TermArena a;
  ParseResult res = parse_protocol(a,
                                   "protocol z;\n"
                                   "names: n, s;\n"
                                   "knowledge: s (+) n;\n"
                                   "secret: s;\n"
                                   "role R\n  knows: n, s;\n  recv x;\n  send x (+) s;\n");
  REQUIRE(res.ok());
  const Protocol& prot = *res.protocol;
  // The chosen name is the secret everywhere: in X0 and inside roles.
  CHECK(prot.initial_knowledge == std::vector<TermId>{a.xor_of({a.secret(), a.name("n")})});
  CHECK(prot.roles[0].steps[0].send == a.xor_of({a.variable("x"), a.secret()}));
}

TEST_CASE("parse_term: standalone term syntax") {
  TermArena a;
  CHECK(parse_term(a, "a (+) b (+) a") == a.name("b"));
  CHECK(parse_term(a, "a xor b") == a.xor_of({a.name("a"), a.name("b")}));
  CHECK(parse_term(a, "0") == a.zero());
  CHECK(parse_term(a, "(a (+) b) (+) a") == a.name("b"));
  CHECK(parse_term(a, "# comment\n a") == a.name("a"));

  // xor binds loosest; first use under pk() makes a key.
  TermId t = parse_term(a, "senc(a, b) (+) c");
  CHECK(t == a.xor_of({a.senc(a.name("a"), a.name("b")), a.name("c")}));
  CHECK(parse_term(a, "aenc(a, pk(kx))") == a.aenc(a.name("a"), a.pk(a.key("kx"))));

  CHECK(parse_term_list(a, "a, b (+) b") == std::vector<TermId>{a.name("a"), a.zero()});

  CHECK_THROWS_AS(parse_term(a, "a b"), detail::ParseError);
  CHECK_THROWS_AS(parse_term(a, "pair(a)"), detail::ParseError);
  CHECK_THROWS_AS(parse_term(a, "aenc(a, b)"), detail::ParseError);
  CHECK_THROWS_AS(parse_term(a, "a (+) "), detail::ParseError);
}

TEST_CASE("randomized: print/parse round-trip") {
  TermArena a;
  testgen::Rng rng(1001);
  TermId names[3] = {a.name("a"), a.name("b"), a.name("c")};
  TermId pkk = a.pk(a.key("k1"));

  // Ground terms where key atoms appear only under pk, so the standalone
  // parser re-infers every atom kind.
  std::function<TermId(int)> gen = [&](int depth) -> TermId {
    if (depth == 0 || rng.chance(0.3)) return names[rng.below(3)];
    switch (rng.below(5)) {
      case 0: return a.pair(gen(depth - 1), gen(depth - 1));
      case 1: return a.senc(gen(depth - 1), names[rng.below(3)]);
      case 2: return a.aenc(gen(depth - 1), pkk);
      case 3: return a.xor_of({gen(depth - 1), gen(depth - 1), gen(depth - 1)});
      default: return a.zero();
    }
  };

  for (int i = 0; i < 300; ++i) {
    TermId t = gen(3);
    std::string s = to_string(a, t);
    CHECK(parse_term(a, s) == t);
  }
}

TEST_CASE("witness JSON: schema, stability, term round-trip") {
  TermArena a;
  Protocol prot = testgen::load_protocol(a, "p1.xordy");
  SearchConfig cfg;
  cfg.max_sessions = 1;
  cfg.size_bound = 4;
  SearchResult res = find_attack(a, prot, cfg);
  REQUIRE(res.status == SearchStatus::Attack);
  const AttackWitness& w = *res.witness;

  std::string text = emit_witness_json(a, w);
  CHECK(emit_witness_json(a, w) == text);  // byte-identical re-emission
  CHECK(text.back() == '\n');

  nlohmann::json j = nlohmann::json::parse(text);
  for (const char* key : {"protocol", "sessions", "trace", "sigma", "sigma_star", "proofs",
                          "secret_proof", "c_size", "size_bound"})
    CHECK(j.contains(key));
  CHECK(j["protocol"] == "p1");
  CHECK(j["size_bound"] == 4);

  // Serialized terms are ground and re-parse to the identical interned term.
  for (const auto& step : j["trace"]) {
    CHECK(to_string(a, parse_term(a, step["recv"].get<std::string>())) ==
          step["recv"].get<std::string>());
    CHECK(to_string(a, parse_term(a, step["send"].get<std::string>())) ==
          step["send"].get<std::string>());
  }
  std::size_t c_size = j["c_size"].get<std::size_t>();
  std::vector<TermId> star_values;
  for (const auto& [var, val] : j["sigma_star"].items())
    star_values.push_back(parse_term(a, val.get<std::string>()));
  CHECK(a.dag_size(std::span<const TermId>(star_values)) <= c_size);
}
