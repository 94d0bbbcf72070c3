#ifndef XORDY_PARSE_HPP
#define XORDY_PARSE_HPP

// Recursive-descent parser for the protocol specification language and
// for standalone terms (CLI input). Produces normalized terms and
// 1-based line/column diagnostics.
//
// Grammar sketch:
//   protocol IDENT ;
//   ( names: IDENT-list ; | keys: IDENT-list ; | agents: IDENT-list ; )*
//   knowledge: term-list ;
//   secret: term ;
//   ( role IDENT ( knows: term-list ; )? ( recv term ; send term ; )+ )+
//
// Terms: 0, identifiers, pk(t), pair(t,u), senc(t,u), aenc(t,u),
// t (+) u (xor, left-assoc, lowest precedence), parentheses. `xor` is an
// accepted alias for (+). Comments run from '#' to end of line.
// Identifiers not covered by a declaration are variables inside roles.

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xordy/protocol.hpp"
#include "xordy/term.hpp"

namespace xordy {

struct Diagnostic {
  std::size_t line = 0;  // 1-based
  std::size_t col = 0;
  std::string message;

  std::string str() const {
    return std::to_string(line) + ":" + std::to_string(col) + ": " + message;
  }
};

namespace detail {

struct ParseError {
  Diagnostic diag;
};

struct Token {
  enum class Kind { Ident, LParen, RParen, Comma, Semi, Colon, XorOp, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::Kind::End;
      tok_.text.clear();
      return;
    }
    char c = src_[pos_];
    if (c == '(') {
      if (pos_ + 2 < src_.size() && src_[pos_ + 1] == '+' && src_[pos_ + 2] == ')') {
        bump(3);
        tok_.kind = Token::Kind::XorOp;
        tok_.text = "(+)";
        return;
      }
      bump(1);
      tok_.kind = Token::Kind::LParen;
      tok_.text = "(";
      return;
    }
    switch (c) {
      case ')': bump(1); tok_.kind = Token::Kind::RParen; tok_.text = ")"; return;
      case ',': bump(1); tok_.kind = Token::Kind::Comma; tok_.text = ","; return;
      case ';': bump(1); tok_.kind = Token::Kind::Semi; tok_.text = ";"; return;
      case ':': bump(1); tok_.kind = Token::Kind::Colon; tok_.text = ":"; return;
      default: break;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        bump(1);
      }
      tok_.kind = Token::Kind::Ident;
      tok_.text = std::string(src_.substr(start, pos_ - start));
      return;
    }
    throw ParseError{Diagnostic{line_, col_, std::string("unexpected character '") + c + "'"}};
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump(1);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump(1);
      } else {
        break;
      }
    }
  }

  void bump(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1, col_ = 1;
  Token tok_;
};

// Identifier resolution. In protocol mode the declaration sections decide
// atom kinds and anything undeclared is a variable; in standalone mode
// identifiers default to names and first use under pk() makes a key.
struct SymbolScope {
  bool standalone = false;
  std::map<std::string, AtomKind> decls;
  std::map<std::string, std::string> aliases;  // secret-override sugar

  void declare(const std::string& lbl, AtomKind k, const Token& at) {
    auto [it, fresh] = decls.emplace(lbl, k);
    if (!fresh && it->second != k)
      throw ParseError{Diagnostic{at.line, at.col, "'" + lbl + "' already declared with a different kind"}};
  }
};

class Parser {
 public:
  Parser(TermArena& a, std::string_view src, SymbolScope scope)
      : a_(a), lex_(src), scope_(std::move(scope)) {
    scope_.decls.emplace("0", AtomKind::Name);
    scope_.decls.emplace("secret", AtomKind::Name);
    scope_.decls.emplace("I", AtomKind::Name);
  }

  TermArena& a_;
  Lexer lex_;
  SymbolScope scope_;

  [[noreturn]] void err(const Token& at, std::string msg) {
    throw ParseError{Diagnostic{at.line, at.col, std::move(msg)}};
  }

  Token expect(Token::Kind k, const char* what) {
    Token t = lex_.take();
    if (t.kind != k) err(t, std::string("expected ") + what);
    return t;
  }

  Token expect_ident(const char* what) { return expect(Token::Kind::Ident, what); }

  void expect_keyword(const char* kw) {
    Token t = lex_.take();
    if (t.kind != Token::Kind::Ident || t.text != kw)
      err(t, std::string("expected '") + kw + "'");
  }

  bool peek_keyword(const char* kw) {
    return lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == kw;
  }

  TermId atom_for(const Token& tk, bool in_pk) {
    std::string lbl = tk.text;
    if (auto it = scope_.aliases.find(lbl); it != scope_.aliases.end()) lbl = it->second;
    auto it = scope_.decls.find(lbl);
    if (it == scope_.decls.end()) {
      if (scope_.standalone) {
        AtomKind k = in_pk ? AtomKind::Key : AtomKind::Name;
        scope_.decls.emplace(lbl, k);
        return k == AtomKind::Key ? a_.key(lbl) : a_.name(lbl);
      }
      scope_.decls.emplace(lbl, AtomKind::Variable);
      return a_.variable(lbl);
    }
    switch (it->second) {
      case AtomKind::Name: return a_.name(lbl);
      case AtomKind::Key: return a_.key(lbl);
      case AtomKind::Variable: return a_.variable(lbl);
    }
    err(tk, "bad atom");
  }

  TermId parse_term() {
    TermId t = parse_primary();
    std::vector<TermId> parts{t};
    while (lex_.peek().kind == Token::Kind::XorOp || peek_keyword("xor")) {
      lex_.take();
      parts.push_back(parse_primary());
    }
    if (parts.size() == 1) return t;
    return a_.xor_of(parts);
  }

  TermId parse_primary() {
    Token t = lex_.take();
    if (t.kind == Token::Kind::LParen) {
      TermId inner = parse_term();
      expect(Token::Kind::RParen, "')'");
      return inner;
    }
    if (t.kind != Token::Kind::Ident) err(t, "expected a term");

    if (t.text == "pk") {
      expect(Token::Kind::LParen, "'('");
      Token arg = expect_ident("a key name");
      TermId k = atom_for(arg, /*in_pk=*/true);
      if (!a_.is_key_atom(k)) err(arg, "pk() requires a declared key");
      expect(Token::Kind::RParen, "')'");
      return a_.pk(k);
    }
    if (t.text == "pair" || t.text == "senc" || t.text == "aenc") {
      expect(Token::Kind::LParen, "'('");
      TermId u = parse_term();
      Token comma = expect(Token::Kind::Comma, "','");
      (void)comma;
      Token key_at = lex_.peek();
      TermId v = parse_term();
      expect(Token::Kind::RParen, "')'");
      if (t.text == "pair") return a_.pair(u, v);
      if (t.text == "senc") return a_.senc(u, v);
      if (a_.shape(v) != Shape::Pk) err(key_at, "aenc key position must be pk(.)");
      return a_.aenc(u, v);
    }
    return atom_for(t, /*in_pk=*/false);
  }

  std::vector<TermId> parse_term_list() {
    std::vector<TermId> out{parse_term()};
    while (lex_.peek().kind == Token::Kind::Comma) {
      lex_.take();
      out.push_back(parse_term());
    }
    return out;
  }

  Protocol parse_protocol() {
    Protocol prot;
    expect_keyword("protocol");
    prot.name = expect_ident("a protocol name").text;
    expect(Token::Kind::Semi, "';'");

    while (peek_keyword("names") || peek_keyword("keys") || peek_keyword("agents")) {
      Token kw = lex_.take();
      expect(Token::Kind::Colon, "':'");
      while (true) {
        Token id = expect_ident("an identifier");
        if (kw.text == "keys") {
          scope_.declare(id.text, AtomKind::Key, id);
        } else {
          scope_.declare(id.text, AtomKind::Name, id);
          if (kw.text == "agents") prot.agent_names.push_back(a_.name(id.text));
        }
        if (lex_.peek().kind == Token::Kind::Comma) {
          lex_.take();
          continue;
        }
        break;
      }
      expect(Token::Kind::Semi, "';'");
    }

    expect_keyword("knowledge");
    expect(Token::Kind::Colon, "':'");
    Token know_at = lex_.peek();
    prot.initial_knowledge = parse_term_list();
    expect(Token::Kind::Semi, "';'");
    for (TermId t : prot.initial_knowledge)
      if (!a_.is_ground(t))
        err(know_at, "knowledge terms must be ground (undeclared identifier?)");

    expect_keyword("secret");
    expect(Token::Kind::Colon, "':'");
    Token sec_at = lex_.peek();
    TermId goal = parse_term();
    expect(Token::Kind::Semi, "';'");
    if (goal != a_.secret()) {
      const TermNode& n = a_.node(goal);
      if (n.shape != Shape::Atom || n.kind != AtomKind::Name)
        err(sec_at, "secret override must be a declared name");
      // Syntactic sugar: the chosen name is the secret from here on.
      scope_.aliases[n.label] = "secret";
      for (TermId& t : prot.initial_knowledge) t = rename_atom(t, goal, a_.secret());
    }

    if (!peek_keyword("role")) err(lex_.peek(), "expected at least one role");
    while (peek_keyword("role")) {
      lex_.take();
      Role role;
      role.name = expect_ident("a role name").text;
      if (peek_keyword("knows")) {
        lex_.take();
        expect(Token::Kind::Colon, "':'");
        role.knowledge = parse_term_list();
        expect(Token::Kind::Semi, "';'");
      }
      if (!peek_keyword("recv")) err(lex_.peek(), "role needs at least one recv/send step");
      while (peek_keyword("recv")) {
        lex_.take();
        TermId r = parse_term();
        expect(Token::Kind::Semi, "';'");
        expect_keyword("send");
        TermId s = parse_term();
        expect(Token::Kind::Semi, "';'");
        role.steps.push_back(RoleStep{r, s});
      }
      prot.roles.push_back(std::move(role));
    }
    Token end = lex_.take();
    if (end.kind != Token::Kind::End) err(end, "unexpected trailing input");
    return prot;
  }

  TermId rename_atom(TermId t, TermId from, TermId to) {
    if (t == from) return to;
    const TermNode& n = a_.node(t);
    if (n.shape == Shape::Atom) return t;
    std::vector<TermId> ch;
    ch.reserve(n.children.size());
    for (TermId c : n.children) ch.push_back(rename_atom(c, from, to));
    switch (n.shape) {
      case Shape::Pk: return a_.pk(ch[0]);
      case Shape::Pair: return a_.pair(ch[0], ch[1]);
      case Shape::Senc: return a_.senc(ch[0], ch[1]);
      case Shape::Aenc: return a_.aenc(ch[0], ch[1]);
      case Shape::Xor: return a_.xor_of(ch);
      default: return t;
    }
  }
};

}  // namespace detail

struct ParseResult {
  std::optional<Protocol> protocol;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return protocol.has_value(); }
};

// Parse and check well-formedness of every role.
inline ParseResult parse_protocol(TermArena& a, std::string_view text) {
  ParseResult res;
  try {
    detail::Parser p(a, text, detail::SymbolScope{});
    Protocol prot = p.parse_protocol();
    for (std::size_t r = 0; r < prot.roles.size(); ++r) {
      WellFormedReport rep = well_formed(a, prot.roles[r]);
      if (!rep.knowledge_vars_ok)
        res.diagnostics.push_back(Diagnostic{
            0, 0, "role '" + prot.roles[r].name + "' is not well-formed: knowledge variables"});
      for (std::size_t i : rep.underivable)
        res.diagnostics.push_back(
            Diagnostic{0, 0, "role '" + prot.roles[r].name + "' is not well-formed: send at step " +
                                 std::to_string(i) + " is not derivable"});
    }
    if (res.diagnostics.empty()) res.protocol = std::move(prot);
  } catch (const detail::ParseError& e) {
    res.diagnostics.push_back(e.diag);
  }
  return res;
}

// Standalone term parsing for CLI input: identifiers are names, first use
// inside pk() makes a key.
inline TermId parse_term(TermArena& a, std::string_view text) {
  detail::SymbolScope scope;
  scope.standalone = true;
  detail::Parser p(a, text, std::move(scope));
  TermId t = p.parse_term();
  detail::Token end = p.lex_.take();
  if (end.kind != detail::Token::Kind::End) p.err(end, "unexpected trailing input");
  return t;
}

inline std::vector<TermId> parse_term_list(TermArena& a, std::string_view text) {
  detail::SymbolScope scope;
  scope.standalone = true;
  detail::Parser p(a, text, std::move(scope));
  std::vector<TermId> ts = p.parse_term_list();
  detail::Token end = p.lex_.take();
  if (end.kind != detail::Token::Kind::End) p.err(end, "unexpected trailing input");
  return ts;
}

}  // namespace xordy

#endif  // XORDY_PARSE_HPP
