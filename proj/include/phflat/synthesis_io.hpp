#pragma once

#include <map>
#include <sstream>
#include <string>

#include "phflat/errors.hpp"
#include "phflat/jet.hpp"
#include "phflat/synthesis.hpp"

namespace phflat {

// Plain-text forms of synthesis problems and results: one `key: value` line
// per field, jets and polynomial germs in the jet syntax, '#' comments and
// blank lines ignored. Example problem:
//
//   k: 1
//   N: 1
//   box: 1/100
//   search_cap: 100000
//   target_sign: 0
//   F1: jet(8)[1, 1/10, ...]
//   ...
//   G8: jet(8)[...]

namespace detail {

inline std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& what) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(what + ": line " + std::to_string(lineno) + " has no 'key: value' form");
    std::string key = line.substr(first, colon - first);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = line.substr(colon + 1);
    const auto vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    while (!value.empty() && (value.back() == ' ' || value.back() == '\t' || value.back() == '\r')) value.pop_back();
    if (!out.emplace(key, value).second) throw ParseError(what + ": duplicate key '" + key + "'");
  }
  return out;
}

inline const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& key, const std::string& what) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(what + ": missing key '" + key + "'");
  return it->second;
}

inline long parse_long(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw ParseError("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("value of '" + key + "' is not an integer: '" + s + "'");
  }
}

}  // namespace detail

inline std::string problem_to_text(const SynthesisProblem& P) {
  std::ostringstream os;
  os << "k: " << P.k << '\n';
  os << "N: " << P.N << '\n';
  os << "box: " << P.box.get_str() << '\n';
  os << "search_cap: " << P.search_cap << '\n';
  os << "target_sign: " << P.target_sign << '\n';
  for (std::size_t i = 0; i < 8; ++i) os << 'F' << i + 1 << ": " << to_text(P.F[i]) << '\n';
  for (std::size_t i = 0; i < 8; ++i) os << 'G' << i + 1 << ": " << to_text(P.G[i]) << '\n';
  return os.str();
}

inline SynthesisProblem parse_problem_text(const std::string& text) {
  const std::string what = "synthesis problem";
  const auto kv = detail::parse_key_values(text, what);
  for (const auto& [key, value] : kv) {
    static const char* known[] = {"k", "N", "box", "search_cap", "target_sign"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (key.size() == 2 && (key[0] == 'F' || key[0] == 'G') && key[1] >= '1' && key[1] <= '8') ok = true;
    if (!ok) throw ParseError(what + ": unknown key '" + key + "'");
  }
  SynthesisProblem P;
  P.k = static_cast<int>(detail::parse_long(detail::require_key(kv, "k", what), "k"));
  if (auto it = kv.find("N"); it != kv.end()) P.N = detail::parse_long(it->second, "N");
  if (auto it = kv.find("box"); it != kv.end()) P.box = parse_rational(it->second);
  if (auto it = kv.find("search_cap"); it != kv.end()) P.search_cap = detail::parse_long(it->second, "search_cap");
  if (auto it = kv.find("target_sign"); it != kv.end()) P.target_sign = static_cast<int>(detail::parse_long(it->second, "target_sign"));
  for (std::size_t i = 0; i < 8; ++i) {
    P.F[i] = parse_jet(detail::require_key(kv, "F" + std::to_string(i + 1), what));
    P.G[i] = parse_jet(detail::require_key(kv, "G" + std::to_string(i + 1), what));
  }
  return P;
}

inline std::string result_to_text(const SynthesisResult& R) {
  std::ostringstream os;
  os << "k: " << R.k << '\n';
  os << "flat_order: " << R.flat_order << '\n';
  os << "relabeled: " << (R.relabeled ? 1 : 0) << '\n';
  os << "alpha: " << R.alpha.get_str() << '\n';
  os << "beta: " << R.beta.get_str() << '\n';
  os << "gamma: " << R.gamma.get_str() << '\n';
  for (std::size_t i = 0; i < 8; ++i) os << 'n' << i + 1 << ": " << R.n[i] << '\n';
  for (std::size_t i = 0; i < 8; ++i) os << 'H' << i + 1 << ": " << to_text(R.H[i]) << '\n';
  os << "composite: " << to_text(R.composite) << '\n';
  return os.str();
}

inline SynthesisResult parse_result_text(const std::string& text) {
  const std::string what = "synthesis result";
  const auto kv = detail::parse_key_values(text, what);
  SynthesisResult R;
  R.k = static_cast<int>(detail::parse_long(detail::require_key(kv, "k", what), "k"));
  R.flat_order = static_cast<int>(detail::parse_long(detail::require_key(kv, "flat_order", what), "flat_order"));
  R.relabeled = detail::parse_long(detail::require_key(kv, "relabeled", what), "relabeled") != 0;
  R.alpha = parse_rational(detail::require_key(kv, "alpha", what));
  R.beta = parse_rational(detail::require_key(kv, "beta", what));
  R.gamma = parse_rational(detail::require_key(kv, "gamma", what));
  for (std::size_t i = 0; i < 8; ++i) {
    const std::string ni = "n" + std::to_string(i + 1), hi = "H" + std::to_string(i + 1);
    R.n[i] = detail::parse_long(detail::require_key(kv, ni, what), ni);
    R.H[i] = parse_polygerm(detail::require_key(kv, hi, what));
  }
  R.composite = parse_jet(detail::require_key(kv, "composite", what));
  return R;
}

// Human-readable certificate: the correctors, exponents, the composite and
// its flatness, together with the exact invariant that was certified.
inline std::string certificate_text(const SynthesisProblem& P, const SynthesisResult& R) {
  std::ostringstream os;
  os << "input flatness k = " << P.k << "\n";
  for (std::size_t i = 0; i < 8; ++i) {
    os << "  H_" << i + 1 << " = " << to_text(R.H[i]) << "   n_" << i + 1 << " = " << R.n[i] << "   ||H_" << i + 1 << " - id|| = " << distance_to_identity(R.H[i]).get_str() << "\n";
  }
  os << "composite = " << to_text(R.composite) << "\n";
  os << "flat order = " << R.flat_order << " (exact; required >= " << P.k + 1 << ")\n";
  if (P.k == 1) {
    const auto s_bar = invariants_AS(R.composite).S;
    const auto s1 = invariants_AS(R.relabeled ? P.F[2] : P.F[0]).S;
    os << "S(composite) = " << s_bar.get_str() << ", S(F_1) = " << s1.get_str() << ", product sign " << sgn(s_bar * s1) << "\n";
  } else {
    const int K = R.composite.order();
    const int lead = R.flat_order + 1;
    if (lead <= K) os << "leading coefficient c_" << lead << " = " << R.composite.c(lead).get_str() << "\n";
  }
  if (R.relabeled) os << "F_1 and F_3 were exchanged to reach the requested sign\n";
  return os.str();
}

}  // namespace phflat
