#ifndef XORDY_TESTS_SUPPORT_FIXTURES_HPP
#define XORDY_TESTS_SUPPORT_FIXTURES_HPP

// Fixture loading for the unit tests. XORDY_FIXTURES_DIR is injected by
// the build and points at tests/fixtures.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "xordy/parse.hpp"

namespace testgen {

inline std::string fixture_path(const std::string& name) {
  return std::string(XORDY_FIXTURES_DIR) + "/" + name;
}

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("cannot read fixture " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline xordy::Protocol load_protocol(xordy::TermArena& a, const std::string& name) {
  xordy::ParseResult res = xordy::parse_protocol(a, read_fixture(name));
  if (!res.ok()) {
    std::string msg = "fixture " + name + " failed to parse:";
    for (const auto& d : res.diagnostics) msg += " " + d.str();
    throw std::runtime_error(msg);
  }
  return std::move(*res.protocol);
}

}  // namespace testgen

#endif  // XORDY_TESTS_SUPPORT_FIXTURES_HPP
