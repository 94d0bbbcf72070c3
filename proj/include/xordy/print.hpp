#ifndef XORDY_PRINT_HPP
#define XORDY_PRINT_HPP

// Rendering of terms, substitutions and proofs in the surface syntax.
// xor factors come out in canonical order, so printing is deterministic.

#include <sstream>
#include <string>

#include "xordy/derivation.hpp"
#include "xordy/term.hpp"

namespace xordy {

inline std::string to_string(TermArena& a, TermId t) {
  const TermNode& n = a.node(t);
  switch (n.shape) {
    case Shape::Atom: return n.label;
    case Shape::Pk: return "pk(" + to_string(a, n.children[0]) + ")";
    case Shape::Pair:
      return "pair(" + to_string(a, n.children[0]) + ", " + to_string(a, n.children[1]) + ")";
    case Shape::Senc:
      return "senc(" + to_string(a, n.children[0]) + ", " + to_string(a, n.children[1]) + ")";
    case Shape::Aenc:
      return "aenc(" + to_string(a, n.children[0]) + ", " + to_string(a, n.children[1]) + ")";
    case Shape::Xor: {
      std::string out;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += " (+) ";
        out += to_string(a, n.children[i]);
      }
      return out;
    }
  }
  return "?";
}

inline std::string to_string(TermArena& a, const Substitution& s) {
  std::string out = "{";
  bool first = true;
  for (auto [v, t] : s.entries()) {
    if (!first) out += ", ";
    first = false;
    out += a.label(v) + " -> " + to_string(a, t);
  }
  return out + "}";
}

inline void print_proof(TermArena& a, const Derivation& d, std::ostream& os, int indent = 0) {
  for (int i = 0; i < indent; ++i) os << "  ";
  os << to_string(a, d.conclusion) << "  [" << rule_name(d.rule) << "]\n";
  for (const Derivation& c : d.children) print_proof(a, c, os, indent + 1);
}

inline std::string proof_to_string(TermArena& a, const Derivation& d) {
  std::ostringstream os;
  print_proof(a, d, os);
  return os.str();
}

}  // namespace xordy

#endif  // XORDY_PRINT_HPP
