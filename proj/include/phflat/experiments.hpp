#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "phflat/blender.hpp"
#include "phflat/errors.hpp"
#include "phflat/expr.hpp"
#include "phflat/fixed_points.hpp"
#include "phflat/fixtures.hpp"
#include "phflat/flat_factory.hpp"
#include "phflat/linearization.hpp"
#include "phflat/saddle.hpp"
#include "phflat/skew.hpp"
#include "phflat/skew_families.hpp"
#include "phflat/synthesis.hpp"
#include "phflat/synthesis_io.hpp"

// Batch experiment runners behind the command-line tool. Every runner takes a
// normalized JSON configuration (defaults filled in, unknown keys rejected)
// and returns the contents of its output files; it performs no I/O of its
// own apart from reading input files named in the configuration. Runs are
// deterministic given the configuration: the worker count changes the
// schedule, never the output.
namespace phflat::experiments {

using Json = nlohmann::ordered_json;

// Version of the CSV layouts below; bumped whenever a column changes.
inline constexpr int kCsvSchema = 1;

inline const std::vector<std::string>& kinds() {
  static const std::vector<std::string> k{"growth-count", "germ-synthesize", "signature", "conv1-demo", "blender-check", "flainfi-demo"};
  return k;
}

struct RunContext {
  int workers = 1;
  std::uint64_t seed = 0;
  std::string base_dir = ".";  // relative input paths in the configuration are resolved here
};

struct OutputFile {
  std::string name;
  std::string contents;
};

struct RunOutput {
  std::vector<OutputFile> files;
  std::string summary;     // human-readable report
  bool truncated = false;  // a work budget stopped the run early
};

namespace detail {

// "%.17g": round-trips every double and does not depend on the locale.
inline std::string num(double v) { return format_scalar(v); }

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline Json growth_defaults() {
  return Json{{"family", "convex"},
              {"eps", 0.01},
              {"delta", 0.1},
              {"n_max", 10},
              {"grid", 4096},
              {"budget", 10000000},
              {"certificate_samples", 64},
              {"base_rate", 3},
              {"envelope", 10},
              {"injection", nullptr}};
}

inline Json injection_defaults() { return Json{{"word", "001"}, {"a", 10000}, {"eps", 0.01}, {"delta", 0.1}, {"point", nullptr}}; }

inline Json synthesis_defaults() { return Json{{"fixture", "octuple"}, {"problem_file", ""}, {"target_k", 4}, {"target_sign", 0}}; }

inline Json signature_defaults() {
  return Json{{"fixture", "schwarzian-f3"}, {"eps", "1/10"}, {"map", ""}, {"constants", Json::object()}, {"domain", Json::array()}, {"window", Json::array()}, {"q_fraction", 0.5}, {"tol", 1e-9}, {"stability", true}};
}

inline Json conv1_defaults() { return Json{{"model", "bundled"}, {"m2_min", 10}, {"m2_max", 40}, {"window", {0.9, 1.1}}}; }

inline Json blender_defaults() {
  return Json{{"rate", "99/100"}, {"g_plus", ""},        {"g_minus", ""},        {"core", {-3, 3}},     {"region", {-3, 3}},
              {"inner", {-2, 2}}, {"y_start", 0},        {"targets", 20},        {"target_width", 0.01}, {"depth_cap", 1200}};
}

inline Json flainfi_defaults() {
  return Json{{"factory_a", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
              {"factory_eps", 0.1},
              {"factory_delta", 0.1},
              {"family", "convex"},
              {"word", "001"},
              {"a", 10000},
              {"eps", 0.01},
              {"delta", 0.1},
              {"point", nullptr},
              {"n_max", 6},
              {"grid", 4096},
              {"base_rate", 3},
              {"envelope", 10},
              {"witness_factor", 100}};
}

inline Json defaults_for(const std::string& kind) {
  if (kind == "growth-count") return growth_defaults();
  if (kind == "germ-synthesize") return synthesis_defaults();
  if (kind == "signature") return signature_defaults();
  if (kind == "conv1-demo") return conv1_defaults();
  if (kind == "blender-check") return blender_defaults();
  if (kind == "flainfi-demo") return flainfi_defaults();
  throw ArgumentError("unknown experiment kind '" + kind + "'");
}

inline bool compatible(const Json& def, const Json& v) {
  if (def.is_null()) return true;
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return false;
}

// Overlays `given` on `defaults`: unknown keys and type mismatches are errors.
inline Json overlay(const Json& defaults, const Json& given, const std::string& where) {
  if (!given.is_object()) throw ArgumentError(where + ": expected an object");
  Json out = defaults;
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!defaults.contains(it.key())) throw ArgumentError(where + ": unknown key '" + it.key() + "'");
    const Json& def = defaults[it.key()];
    if (!compatible(def, it.value())) throw ArgumentError(where + ": key '" + it.key() + "' has the wrong type");
    out[it.key()] = it.value();
  }
  return out;
}

template <class T>
T get(const Json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("config key '") + key + "': " + e.what());
  }
}

inline std::pair<double, double> get_range(const Json& cfg, const char* key) {
  const Json& v = cfg.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) throw ArgumentError(std::string("config key '") + key + "' must be [lo, hi]");
  const double lo = v[0].get<double>(), hi = v[1].get<double>();
  if (!(lo < hi)) throw ArgumentError(std::string("config key '") + key + "' must satisfy lo < hi");
  return {lo, hi};
}

inline Word parse_word(const std::string& text) {
  Word w;
  for (char c : text) {
    if (c == ',' || c == ' ') continue;
    if (c < '0' || c > '9') throw ArgumentError("word '" + text + "' must consist of symbol digits");
    w.push_back(c - '0');
  }
  if (w.empty()) throw ArgumentError("empty word");
  return w;
}

inline SkewFamily family_by_name(const std::string& name, double eps, double delta) {
  if (name == "convex") return convex_family(eps);
  if (name == "schwarzian") return schwarzian_family(eps, delta);
  throw ArgumentError("unknown family '" + name + "' (expected convex or schwarzian)");
}

// The fixed point of a leaf used for an injection: the given point snapped
// to the nearest fixed point, or the first repeller inside the certified
// region (the first hyperbolic point when there is no repeller).
inline double injection_point(const SkewFamily& fam, const Word& w, const Json& point) {
  const SmoothMap1D R = fiber_return(w, fam.skew);
  const auto pts = find_fixed_points(R, fam.count_lo, fam.count_hi);
  if (pts.empty()) throw PreconditionError("injection: leaf " + word_text(w) + " has no fixed point");
  if (!point.is_null()) {
    if (!point.is_number()) throw ArgumentError("injection point must be a number or null");
    const double target = point.get<double>();
    const auto best = std::min_element(pts.begin(), pts.end(), [&](const auto& a, const auto& b) { return std::fabs(a.p - target) < std::fabs(b.p - target); });
    return best->p;
  }
  for (const auto& p : pts)
    if (p.repelling() && p.p > fam.certificate.x_lo && p.p < fam.certificate.x_hi) return p.p;
  for (const auto& p : pts)
    if (p.hyperbolic() && p.p > fam.certificate.x_lo && p.p < fam.certificate.x_hi) return p.p;
  throw PreconditionError("injection: leaf " + word_text(w) + " has no hyperbolic fixed point in the certified region");
}

inline std::string growth_csv(const GrowthSeries& s, int per_leaf_bound) {
  std::ostringstream os;
  os << "period,words,leaves,fixed_points,hyperbolic,non_hyperbolic,max_per_fiber,max_in_region,bound,cert_samples,cert_certified,cert_escaping,cert_failures,cert_point_failures,coverage\n";
  for (const auto& r : s.rows) {
    const long judged = r.cert_certified + r.cert_failures;
    os << r.period << ',' << r.words << ',' << r.leaves << ',' << r.fixed_points << ',' << r.hyperbolic << ',' << r.non_hyperbolic << ',' << r.max_per_fiber << ','
       << r.max_in_region << ',' << static_cast<long>(per_leaf_bound) * r.words << ',' << r.cert_samples << ',' << r.cert_certified << ',' << r.cert_escaping << ','
       << r.cert_failures << ',' << r.cert_point_failures << ',' << (judged ? fixed(static_cast<double>(r.cert_certified) / static_cast<double>(judged), 6) : std::string("")) << '\n';
  }
  return os.str();
}

inline std::string growth_plot(const GrowthSeries& s) {
  std::ostringstream os;
  for (const auto& r : s.rows) os << r.period << ' ' << num(std::log10(std::max<double>(1, static_cast<double>(r.fixed_points)))) << '\n';
  return os.str();
}

// Runs `job(i)` for i in [0, n) on up to `workers` threads; results land by
// index, so the output order does not depend on the schedule.
template <class R, class Job>
std::vector<R> parallel_map(std::size_t n, int workers, Job job) {
  std::vector<R> out(n);
  const std::size_t w = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::future<void>> running;
  for (std::size_t t = 0; t < std::min(w, n); ++t) {
    running.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t i = t; i < n; i += w) out[i] = job(i);
    }));
  }
  for (auto& f : running) f.get();
  return out;
}

// A uniform double in [0, 1) from the top 53 bits (portable, unlike the
// standard distributions).
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || path.front() == '/' || base.empty()) return path;
  return base + "/" + path;
}

}  // namespace detail

// Fills defaults and validates keys; the result is a fixed point of
// normalization and survives a JSON round trip unchanged.
inline Json normalize_config(const std::string& kind, const Json& given) {
  Json g = given.is_null() ? Json::object() : given;
  if (!g.is_object()) throw ArgumentError("configuration must be a JSON object");
  if (g.contains("kind")) {
    if (!g["kind"].is_string() || g["kind"].get<std::string>() != kind) throw ArgumentError("configuration is for '" + g["kind"].dump() + "', not '" + kind + "'");
    g.erase("kind");
  }
  Json out{{"kind", kind}};
  Json common{{"seed", 0}, {"workers", 1}, {"out", ""}};
  Json body = detail::defaults_for(kind);
  for (auto it = common.begin(); it != common.end(); ++it) body[it.key()] = it.value();
  Json merged = detail::overlay(body, g, kind);
  if ((kind == "growth-count") && !merged["injection"].is_null()) merged["injection"] = detail::overlay(detail::injection_defaults(), merged["injection"], kind + ".injection");
  if (kind == "signature") {
    // Materialize the fixture so the configuration names the map it ran.
    const std::string fx = merged["fixture"].get<std::string>();
    if (merged["map"].get<std::string>().empty()) {
      if (fx == "schwarzian-f3") {
        merged["map"] = "x - e*(x - 1/2)*(x - 1/2 - e)*(x - 1/2 + e)";
        merged["constants"] = Json{{"e", merged["eps"]}};
        merged["domain"] = {0, 1};
        merged["window"] = {0.05, 0.95};
      } else if (fx == "mobius") {
        merged["map"] = "2*x/(1 + x)";
        merged["domain"] = {-0.5, 4};
        merged["window"] = {-0.4, 3};
      } else if (fx == "linear") {
        merged["map"] = "(x - 1)/2 + 1";
        merged["domain"] = {-4, 6};
        merged["window"] = {-3, 5};
      } else if (fx != "custom") {
        throw ArgumentError("signature: unknown fixture '" + fx + "'");
      }
    }
  }
  for (auto it = merged.begin(); it != merged.end(); ++it) out[it.key()] = it.value();
  return out;
}

// --- growth-count --------------------------------------------------------------

inline RunOutput run_growth_count(const Json& cfg, const RunContext& ctx) {
  using detail::get;
  SkewFamily fam = detail::family_by_name(get<std::string>(cfg, "family"), get<double>(cfg, "eps"), get<double>(cfg, "delta"));
  std::ostringstream sum;
  sum << "family " << fam.name << " (";
  for (const auto& [k, v] : fam.parameters) sum << k << '=' << detail::num(v) << ' ';
  sum << "), fiber region [" << fam.count_lo << ", " << fam.count_hi << "]\n";

  SkewProduct skew = fam.skew;
  const Json& inj = cfg.at("injection");
  if (!inj.is_null()) {
    const Word w = detail::parse_word(get<std::string>(inj, "word"));
    const double p = detail::injection_point(fam, w, inj.at("point"));
    const FlatInjection fi = inject_flat_fiber(skew, w, p, get<long>(inj, "a"), get<double>(inj, "eps"), get<double>(inj, "delta"));
    skew = fi.skew;
    sum << "injected flat fiber: leaf " << word_text(fi.root) << ", fixed point " << detail::num(fi.fixed_point) << ", a = " << fi.a << ", eps = " << detail::num(fi.eps)
        << ", window [" << detail::num(fi.window_lo) << ", " << detail::num(fi.window_hi) << "]\n";
  }

  GrowthOptions opt;
  opt.workers = ctx.workers;
  opt.budget = get<long>(cfg, "budget");
  opt.fixed_points.cells_per_period = get<int>(cfg, "grid");
  opt.certificate = fam.certificate;
  opt.certificate.samples = get<int>(cfg, "certificate_samples");
  const GrowthSeries s = growth_series(skew, get<int>(cfg, "n_max"), fam.count_lo, fam.count_hi, opt);

  RunOutput out;
  out.truncated = s.truncated;
  out.files.push_back({"growth.csv", detail::growth_csv(s, fam.per_leaf_bound)});
  out.files.push_back({"growth_plot.dat", detail::growth_plot(s)});

  bool bound_ok = true, region_ok = true;
  for (const auto& r : s.rows) {
    bound_ok = bound_ok && r.fixed_points <= static_cast<long>(fam.per_leaf_bound) * r.words;
    region_ok = region_ok && r.max_in_region <= fam.in_region_bound;
  }
  sum << "periods computed: " << s.rows.size() << (s.truncated ? " (truncated by the budget at period " + std::to_string(s.truncated_at) + ")" : "") << "\n";
  sum << "per-leaf bound " << fam.per_leaf_bound << " (total <= " << fam.per_leaf_bound << " x words): " << (bound_ok ? "holds" : "VIOLATED") << "\n";
  sum << "in-region bound " << fam.in_region_bound << ": " << (region_ok ? "holds" : "exceeded") << "\n";
  sum << "certificate " << to_string(s.certificate) << ": " << (s.certificate_holds() ? "holds at every sample and every fixed point in X" : "FAILS") << "\n";
  if (!s.rows.empty()) {
    const GrowthClass c = classify_growth(s, get<double>(cfg, "base_rate"), get<double>(cfg, "envelope"));
    sum << "classification: " << (c.bounded ? "bounded_exponential" : "exceeds") << " (C = " << detail::num(c.C) << ", rate " << detail::num(c.rate) << ", envelope "
        << detail::num(c.envelope) << (c.bounded ? "" : ", witness period " + std::to_string(c.witness)) << ")\n";
  }
  out.summary = sum.str();
  out.files.push_back({"summary.txt", out.summary});
  return out;
}

// --- germ-synthesize -------------------------------------------------------------

inline RunOutput run_germ_synthesize(const Json& cfg, const RunContext& ctx) {
  using detail::get;
  const std::string fx = get<std::string>(cfg, "fixture");
  RunOutput out;
  std::ostringstream sum;
  if (fx == "chain") {
    const int target = get<int>(cfg, "target_k");
    if (target < 2) throw ArgumentError("germ-synthesize: target_k must be >= 2");
    const auto level1 = fixtures::chain_level1_problems();
    const auto chain = synthesize_chain(level1, target);
    std::ostringstream res, cert;
    for (const auto& lvl : chain) {
      for (std::size_t i = 0; i < lvl.results.size(); ++i) {
        res << "# level k=" << lvl.k << " problem " << i + 1 << "\n" << result_to_text(lvl.results[i]) << "\n";
        cert << "level k=" << lvl.k << " problem " << i + 1 << ": flat order " << lvl.results[i].flat_order << ", composite " << to_text(lvl.results[i].composite) << "\n";
      }
    }
    const auto& top = chain.back().results.front();
    sum << "chain of " << chain.size() << " levels; final composite is " << top.flat_order << "-flat: " << to_text(top.composite) << "\n";
    cert << sum.str();
    out.files.push_back({"chain_results.txt", res.str()});
    out.files.push_back({"certificate.txt", cert.str()});
  } else {
    SynthesisProblem P;
    if (fx == "octuple") {
      P = fixtures::keq1a_octuple();
    } else if (fx == "file") {
      P = parse_problem_text(detail::read_file(detail::resolve(ctx.base_dir, get<std::string>(cfg, "problem_file"))));
    } else {
      throw ArgumentError("germ-synthesize: unknown fixture '" + fx + "' (expected octuple, chain or file)");
    }
    if (const int ts = get<int>(cfg, "target_sign"); ts != 0) P.target_sign = ts;
    out.files.push_back({"problem.txt", problem_to_text(P)});
    const SynthesisResult R = synthesize(P);
    out.files.push_back({"result.txt", result_to_text(R)});
    out.files.push_back({"certificate.txt", certificate_text(P, R)});
    sum << "k = " << P.k << " -> flat order " << R.flat_order << "; composite " << to_text(R.composite) << "\n";
  }
  out.summary = sum.str();
  return out;
}

// --- signature -------------------------------------------------------------------

inline RunOutput run_signature(const Json& cfg, const RunContext& ctx) {
  using detail::get;
  std::map<std::string, Rational> constants;
  for (auto it = cfg.at("constants").begin(); it != cfg.at("constants").end(); ++it) {
    constants[it.key()] = it.value().is_string() ? parse_rational(it.value().get<std::string>()) : parse_rational(detail::num(it.value().get<double>()));
  }
  const auto [dlo, dhi] = detail::get_range(cfg, "domain");
  const auto [wlo, whi] = detail::get_range(cfg, "window");
  const Expr e = Expr::parse(get<std::string>(cfg, "map"), "x", constants);
  const SmoothMap1D f = SmoothMap1D::from_expr(e, SmoothMap1D::Domain::interval(dlo, dhi), get<std::string>(cfg, "fixture"));
  const auto pts = find_fixed_points(f, wlo, whi);

  struct Pair {
    HyperbolicFixedPoint u, s;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto &a = pts[i], &b = pts[i + 1];
    if (a.repelling() && b.attracting()) pairs.push_back({a, b});
    if (a.attracting() && b.repelling()) pairs.push_back({b, a});
  }
  if (pairs.empty()) {
    std::string list;
    for (const auto& p : pts) list += " " + detail::num(p.p) + "(λ=" + detail::num(p.lambda) + ")";
    throw PreconditionError("signature: no adjacent repeller-attractor pair in the window; fixed points:" + (list.empty() ? std::string(" none") : list));
  }
  TransitionOptions topt;
  topt.tol = get<double>(cfg, "tol");
  const double frac = get<double>(cfg, "q_fraction");
  if (!(frac > 0 && frac < 1)) throw ArgumentError("signature: q_fraction must lie in (0, 1)");
  const bool stability = get<bool>(cfg, "stability");

  struct Row {
    HeteroclinicRecord rec;
    double res_u = 0, res_s = 0;
    int stable = -1;
  };
  const auto rows = detail::parallel_map<Row>(pairs.size(), ctx.workers, [&](std::size_t i) {
    Row r;
    const double q = pairs[i].u.p + frac * (pairs[i].s.p - pairs[i].u.p);
    r.rec = transition_map(f, pairs[i].u, pairs[i].s, q, topt);
    r.res_u = koenigs(f, pairs[i].u, topt.koenigs).residual();
    r.res_s = koenigs(f, pairs[i].s, topt.koenigs).residual();
    if (stability) r.stable = signature_stability(f, pairs[i].u, pairs[i].s, r.rec, topt).stable ? 1 : 0;
    return r;
  });

  std::ostringstream csv, sum;
  csv << "pair,p_u,p_s,q,lambda_u,lambda_s,A,S,tau_A,tau_S,stable,koenigs_residual_u,koenigs_residual_s\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv << i + 1 << ',' << detail::num(r.rec.p_u) << ',' << detail::num(r.rec.p_s) << ',' << detail::num(r.rec.q) << ',' << detail::num(r.rec.lambda_u) << ','
        << detail::num(r.rec.lambda_s) << ',' << detail::num(r.rec.A) << ',' << detail::num(r.rec.S) << ',' << r.rec.signature.tau_A << ',' << r.rec.signature.tau_S << ','
        << (r.stable < 0 ? std::string("") : std::to_string(r.stable)) << ',' << detail::num(r.res_u) << ',' << detail::num(r.res_s) << '\n';
    sum << "pair " << i + 1 << ": " << detail::num(r.rec.p_u) << " -> " << detail::num(r.rec.p_s) << " at q = " << detail::num(r.rec.q) << ": (tau_A, tau_S) = (" << r.rec.signature.tau_A
        << ", " << r.rec.signature.tau_S << ")" << (r.stable < 0 ? "" : (r.stable ? ", stable" : ", not stable")) << "\n";
  }
  if (rows.size() >= 2) {
    bool opposite = false;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = i + 1; j < rows.size(); ++j) opposite = opposite || rows[i].rec.signature.tau_A * rows[j].rec.signature.tau_A < 0;
    sum << "opposite tau_A across pairs: " << (opposite ? "yes" : "no") << "\n";
  }
  RunOutput out;
  out.files.push_back({"signature.csv", csv.str()});
  out.summary = sum.str();
  return out;
}

// --- conv1-demo ------------------------------------------------------------------

inline RunOutput run_conv1_demo(const Json& cfg, const RunContext& ctx) {
  using detail::get;
  const std::string model = get<std::string>(cfg, "model");
  if (model != "bundled" && model != "affine") throw ArgumentError("conv1-demo: model must be bundled or affine");
  const SaddleModel M = SaddleModel::bundled(model == "affine");
  const auto [lo, hi] = detail::get_range(cfg, "window");
  const auto schedule = balanced_schedule(M, get<long>(cfg, "m2_min"), get<long>(cfg, "m2_max"), lo, hi);
  if (schedule.empty()) throw PreconditionError("conv1-demo: no balanced exponent pair in the requested range");
  const auto runs = sweep_schedule(M, schedule, ctx.workers);
  std::ostringstream csv, legs, plot, sum;
  csv << "m1,m2,multiplier,A,S,A_ref,S_ref\n";
  legs << "m1,m2,nominal_multiplier,rel_err_A,rel_err_S,A_F1,A_F3,A_F3_scaled\n";
  auto rel = [](double v, double ref) { return ref == 0 ? std::fabs(v) : std::fabs(v - ref) / std::fabs(ref); };
  for (const auto& r : runs) {
    csv << r.m1 << ',' << r.m2 << ',' << detail::num(r.multiplier) << ',' << detail::num(r.A) << ',' << detail::num(r.S) << ',' << detail::num(r.A_ref) << ',' << detail::num(r.S_ref) << '\n';
    legs << r.m1 << ',' << r.m2 << ',' << detail::num(r.nominal_multiplier) << ',' << detail::num(rel(r.A, r.A_ref)) << ',' << detail::num(rel(r.S, r.S_ref)) << ','
         << detail::num(r.A_F1) << ',' << detail::num(r.A_F3) << ',' << detail::num(r.A_F3_scaled) << '\n';
    plot << r.m2 << ' ' << detail::num(rel(r.A, r.A_ref)) << '\n';
  }
  const auto& last = runs.back();
  sum << runs.size() << " balanced pairs, m2 in [" << runs.front().m2 << ", " << last.m2 << "]; at (" << last.m1 << ", " << last.m2 << "): A = " << detail::num(last.A)
      << " (ref " << detail::num(last.A_ref) << "), S = " << detail::num(last.S) << " (ref " << detail::num(last.S_ref) << ")\n";
  RunOutput out;
  out.files = {{"conv1.csv", csv.str()}, {"conv1_legs.csv", legs.str()}, {"conv1_plot.dat", plot.str()}};
  out.summary = sum.str();
  return out;
}

// --- blender-check ---------------------------------------------------------------

inline BlenderSpec blender_spec_from(const Json& cfg) {
  using detail::get;
  BlenderSpec s = BlenderSpec::standard(get<std::string>(cfg, "rate"));
  const std::string gp = get<std::string>(cfg, "g_plus"), gm = get<std::string>(cfg, "g_minus");
  if (!gp.empty()) s.g_plus = Expr::parse(gp);
  if (!gm.empty()) s.g_minus = Expr::parse(gm);
  std::tie(s.core_lo, s.core_hi) = detail::get_range(cfg, "core");
  std::tie(s.region_lo, s.region_hi) = detail::get_range(cfg, "region");
  std::tie(s.inner_lo, s.inner_hi) = detail::get_range(cfg, "inner");
  return s;
}

inline RunOutput run_blender_check(const Json& cfg, const RunContext& ctx) {
  using detail::get;
  const BlenderSpec spec = blender_spec_from(cfg);
  const BlenderReport rep = blender_covering_report(spec);
  std::ostringstream sum;
  sum << "g+ = " << spec.g_plus.text() << ", g- = " << spec.g_minus.text() << "\n";
  sum << "g+(core) ends: [" << detail::num(rep.plus_lo.lower()) << ", " << detail::num(rep.plus_lo.upper()) << "], [" << detail::num(rep.plus_hi.lower()) << ", "
      << detail::num(rep.plus_hi.upper()) << "]\n";
  sum << "g-(core) ends: [" << detail::num(rep.minus_lo.lower()) << ", " << detail::num(rep.minus_lo.upper()) << "], [" << detail::num(rep.minus_hi.lower()) << ", "
      << detail::num(rep.minus_hi.upper()) << "]\n";
  sum << "covering: " << (rep.covers ? "yes" : "no") << ", auxiliary inclusions: " << (rep.auxiliary ? "yes" : "no") << "\n";
  for (const auto& f : rep.failures) sum << "  " << f << "\n";
  RunOutput out;
  std::ostringstream csv;
  csv << "target,target_lo,target_hi,found,depth,explored,word\n";
  if (rep.ok()) {
    const double w = get<double>(cfg, "target_width");
    const int count = get<int>(cfg, "targets");
    if (!(w > 0 && w < spec.core_hi - spec.core_lo)) throw ArgumentError("blender-check: target_width must be positive and smaller than the core");
    // Both ends of the core, then random targets drawn from the seed.
    std::vector<std::pair<double, double>> targets{{spec.core_lo, spec.core_lo + w}, {spec.core_hi - w, spec.core_hi}};
    std::mt19937_64 rng(ctx.seed);
    for (int i = 0; i < count; ++i) {
      const double lo = spec.core_lo + detail::unit(rng) * (spec.core_hi - spec.core_lo - w);
      targets.push_back({lo, lo + w});
    }
    const double y0 = get<double>(cfg, "y_start");
    const int cap = get<int>(cfg, "depth_cap");
    const auto results = detail::parallel_map<TangleResult>(targets.size(), ctx.workers, [&](std::size_t i) { return tangle_search(spec, y0, targets[i].first, targets[i].second, cap); });
    std::size_t found = 0, deepest = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto& r = results[i];
      csv << i + 1 << ',' << detail::num(targets[i].first) << ',' << detail::num(targets[i].second) << ',' << (r.witness ? 1 : 0) << ',' << (r.witness ? r.witness->word.size() : 0) << ','
          << r.explored << ',' << (r.witness ? r.witness->word : std::string("")) << '\n';
      if (r.witness) {
        ++found;
        deepest = std::max(deepest, r.witness->word.size());
      }
    }
    sum << "tangle search from y = " << detail::num(y0) << ": " << found << "/" << targets.size() << " targets of width " << detail::num(w) << " reached, deepest witness " << deepest
        << " (cap " << cap << ")\n";
  } else {
    sum << "tangle search skipped: the covering criterion does not hold\n";
  }
  out.files.push_back({"witnesses.csv", csv.str()});
  out.summary = sum.str();
  out.files.push_back({"blender.txt", out.summary});
  return out;
}

// --- flainfi-demo: flat-fiber factory and injection ---------------------------------

inline RunOutput run_flainfi_demo(const Json& cfg, const RunContext& ctx) {
  using detail::get;
  std::ostringstream fcsv, sum;
  fcsv << "a,expected,found,hyperbolic,max_root_error,min_log10_deviation,margin_log10,ok\n";
  const double feps = get<double>(cfg, "factory_eps"), fdelta = get<double>(cfg, "factory_delta");
  const auto avals = cfg.at("factory_a").get<std::vector<long>>();
  struct FactoryRow {
    long found = 0, hyperbolic = 0;
    double err = 0, min_dev = 0, margin = 0;
  };
  const auto frows = detail::parallel_map<FactoryRow>(avals.size(), ctx.workers, [&](std::size_t i) {
    const long a = avals[i];
    const auto r = flat_fiber_perturb(DoubleJet::identity(4), a, feps, fdelta);
    const auto pts = find_fixed_points_report(r.map, r.window_lo, r.window_hi).points;
    FactoryRow row;
    row.found = static_cast<long>(pts.size());
    row.margin = r.margin_log10;
    row.min_dev = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (pts[j].hyperbolic()) ++row.hyperbolic;
      if (j < r.roots.size()) row.err = std::max(row.err, std::fabs(pts[j].p - r.roots[j]));
      row.min_dev = std::min(row.min_dev, pts[j].deviation.log10abs);
    }
    return row;
  });
  bool factory_ok = true;
  for (std::size_t i = 0; i < avals.size(); ++i) {
    const auto& r = frows[i];
    const bool ok = r.found == avals[i] + 1 && r.hyperbolic == r.found && r.err <= 1e-12 && r.min_dev > r.margin;
    factory_ok = factory_ok && ok;
    fcsv << avals[i] << ',' << avals[i] + 1 << ',' << r.found << ',' << r.hyperbolic << ',' << detail::num(r.err) << ',' << detail::num(r.min_dev) << ',' << detail::num(r.margin) << ','
         << (ok ? 1 : 0) << '\n';
  }
  sum << "factory (eps = " << detail::num(feps) << ", delta = " << detail::num(fdelta) << "): " << (factory_ok ? "a + 1 hyperbolic roots at j*delta/a for every a" : "MISMATCH") << "\n";

  SkewFamily fam = detail::family_by_name(get<std::string>(cfg, "family"), 0.01, 0.1);
  const Word w = detail::parse_word(get<std::string>(cfg, "word"));
  const double p = detail::injection_point(fam, w, cfg.at("point"));
  const FlatInjection inj = inject_flat_fiber(fam.skew, w, p, get<long>(cfg, "a"), get<double>(cfg, "eps"), get<double>(cfg, "delta"));
  FixedPointOptions fpo;
  fpo.cells_per_period = get<int>(cfg, "grid");
  const auto leaf = find_fixed_points_report(fiber_return(inj.root, inj.skew), fam.count_lo, fam.count_hi, fpo).points;
  const long n_star = static_cast<long>(inj.root.size());
  const double threshold = get<double>(cfg, "witness_factor") * std::pow(3.0, static_cast<double>(n_star));
  sum << "injection into leaf " << word_text(inj.root) << " at " << detail::num(inj.fixed_point) << " with a = " << inj.a << ": leaf has " << leaf.size() << " fixed points (threshold "
      << detail::num(threshold) << " at period " << n_star << "): " << (static_cast<double>(leaf.size()) > threshold ? "exceeds" : "below") << "\n";

  GrowthOptions opt;
  opt.workers = ctx.workers;
  opt.fixed_points = fpo;
  const GrowthSeries s = growth_series(inj.skew, get<int>(cfg, "n_max"), fam.count_lo, fam.count_hi, opt);
  const GrowthClass c = classify_growth(s, get<double>(cfg, "base_rate"), get<double>(cfg, "envelope"));
  sum << "classification after injection: " << (c.bounded ? "bounded_exponential" : "exceeds") << (c.bounded ? "" : " (witness period " + std::to_string(c.witness) + ")") << "\n";

  RunOutput out;
  out.truncated = s.truncated;
  out.files = {{"factory.csv", fcsv.str()}, {"injection.csv", detail::growth_csv(s, fam.per_leaf_bound)}, {"injection_plot.dat", detail::growth_plot(s)}};
  out.summary = sum.str();
  out.files.push_back({"summary.txt", out.summary});
  return out;
}

inline RunOutput run(const std::string& kind, const Json& normalized, const RunContext& ctx) {
  if (kind == "growth-count") return run_growth_count(normalized, ctx);
  if (kind == "germ-synthesize") return run_germ_synthesize(normalized, ctx);
  if (kind == "signature") return run_signature(normalized, ctx);
  if (kind == "conv1-demo") return run_conv1_demo(normalized, ctx);
  if (kind == "blender-check") return run_blender_check(normalized, ctx);
  if (kind == "flainfi-demo") return run_flainfi_demo(normalized, ctx);
  throw ArgumentError("unknown experiment kind '" + kind + "'");
}

}  // namespace phflat::experiments
