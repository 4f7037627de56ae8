#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/fixed_points.hpp"
#include "phflat/smooth_map.hpp"

namespace phflat {

using BigInt = boost::multiprecision::cpp_int;

// A cyclic word over the symbols 0..m−1; the return map of a word applies
// its first symbol first.
using Word = std::vector<int>;

inline std::string word_text(const Word& w) {
  std::string s;
  const bool wide = std::any_of(w.begin(), w.end(), [](int c) { return c > 9; });
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (wide && i > 0) s += ',';
    s += std::to_string(w[i]);
  }
  return s;
}

// Symbolic dynamics of the base: a subshift of finite type given by a 0/1
// transition matrix, optionally carrying a hyperbolic toral automorphism B
// whose periodic points are counted geometrically.
struct SymbolicBase {
  using Torus = std::array<std::array<long, 2>, 2>;

  int m = 0;
  std::vector<std::vector<int>> transition;
  bool irreducible = false;  // declared irreducible; verified by validate()
  std::optional<Torus> torus;

  static SymbolicBase full_shift(int m) {
    SymbolicBase b;
    b.m = m;
    b.transition.assign(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(m), 1));
    b.irreducible = true;
    b.validate();
    return b;
  }

  static SymbolicBase from_matrix(std::vector<std::vector<int>> t, bool irreducible = false) {
    SymbolicBase b;
    b.m = static_cast<int>(t.size());
    b.transition = std::move(t);
    b.irreducible = irreducible;
    b.validate();
    return b;
  }

  // Full shift on m Markov rectangles of the automorphism B.
  static SymbolicBase toral(const Torus& B, int m) {
    SymbolicBase b = full_shift(m);
    b.torus = B;
    b.validate();
    return b;
  }

  bool allowed(int a, int b) const { return transition[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] != 0; }

  bool is_full_shift() const {
    for (const auto& row : transition)
      for (int v : row)
        if (v != 1) return false;
    return true;
  }

  // Every transition of the cyclic word, including last → first, is allowed.
  bool admissible_cycle(const Word& w) const {
    if (w.empty()) return false;
    for (int s : w)
      if (s < 0 || s >= m) return false;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!allowed(w[i], w[(i + 1) % w.size()])) return false;
    return true;
  }

  void validate() const {
    if (m < 1) throw ArgumentError("symbolic base needs at least one symbol");
    if (transition.size() != static_cast<std::size_t>(m)) throw ArgumentError("transition matrix must be m×m");
    for (const auto& row : transition) {
      if (row.size() != static_cast<std::size_t>(m)) throw ArgumentError("transition matrix must be m×m");
      for (int v : row)
        if (v != 0 && v != 1) throw ArgumentError("transition matrix entries must be 0 or 1");
    }
    if (irreducible) {
      // Strong connectivity: every symbol reaches every other.
      for (int s = 0; s < m; ++s) {
        std::vector<char> seen(static_cast<std::size_t>(m), 0);
        std::vector<int> stack{s};
        while (!stack.empty()) {
          const int a = stack.back();
          stack.pop_back();
          for (int b = 0; b < m; ++b) {
            if (allowed(a, b) && !seen[static_cast<std::size_t>(b)]) {
              seen[static_cast<std::size_t>(b)] = 1;
              stack.push_back(b);
            }
          }
        }
        if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ConnectivityError("transition matrix is declared irreducible but is not strongly connected");
      }
    }
    if (torus) {
      const auto& B = *torus;
      const long det = B[0][0] * B[1][1] - B[0][1] * B[1][0];
      if (det != 1 && det != -1) throw ArgumentError("toral automorphism must have determinant ±1");
      if (std::labs(B[0][0] + B[1][1]) <= 2) throw NonHyperbolicError("toral automorphism is not hyperbolic (|trace| <= 2)");
    }
  }
};

// Number of period-n points of the base: |det(B^n − I)| for a toral
// automorphism, m^n for the full shift, trace(T^n) for a subshift.
inline BigInt base_periodic_count(const SymbolicBase& base, int n) {
  if (n < 1) throw ArgumentError("base_periodic_count: n must be >= 1");
  if (base.torus) {
    using M = std::array<std::array<BigInt, 2>, 2>;
    auto mul = [](const M& a, const M& b) {
      M c;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
      return c;
    };
    M B, P;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        B[i][j] = (*base.torus)[i][j];
        P[i][j] = i == j ? 1 : 0;
      }
    for (int k = 0; k < n; ++k) P = mul(P, B);
    const BigInt det = (P[0][0] - 1) * (P[1][1] - 1) - P[0][1] * P[1][0];
    return det < 0 ? BigInt(-det) : det;
  }
  if (base.is_full_shift()) return boost::multiprecision::pow(BigInt(base.m), static_cast<unsigned>(n));
  const auto m = static_cast<std::size_t>(base.m);
  std::vector<std::vector<BigInt>> P(m, std::vector<BigInt>(m, 0)), T(m, std::vector<BigInt>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    P[i][i] = 1;
    for (std::size_t j = 0; j < m; ++j) T[i][j] = base.transition[i][j];
  }
  for (int k = 0; k < n; ++k) {
    std::vector<std::vector<BigInt>> Q(m, std::vector<BigInt>(m, 0));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t l = 0; l < m; ++l) {
        if (P[i][l] == 0) continue;
        for (std::size_t j = 0; j < m; ++j) Q[i][j] += P[i][l] * T[l][j];
      }
    P = std::move(Q);
  }
  BigInt tr = 0;
  for (std::size_t i = 0; i < m; ++i) tr += P[i][i];
  return tr;
}

// Representative of a rotation class of admissible period-n words: the
// lexicographically least rotation, with its primitive period (the number of
// distinct rotations, i.e. the size of the periodic orbit it stands for).
struct PeriodicWord {
  Word word;
  int period = 0;
};

// Deterministic stream of the representatives of all admissible cyclic words
// of length n in lexicographic order (iterative prenecklace generation),
// consumable in chunks.
class PeriodicWordStream {
 public:
  PeriodicWordStream(const SymbolicBase& base, int n) : base_(base), n_(n), a_(static_cast<std::size_t>(n) + 1, 0) {
    if (n < 1) throw ArgumentError("periodic_words: n must be >= 1");
    base_.validate();
  }

  std::optional<PeriodicWord> next() {
    while (true) {
      if (done_) return std::nullopt;
      if (!started_) {
        started_ = true;
        p_ = 1;
      } else {
        int i = n_;
        while (i > 0 && a_[static_cast<std::size_t>(i)] == base_.m - 1) --i;
        if (i == 0) {
          done_ = true;
          return std::nullopt;
        }
        ++a_[static_cast<std::size_t>(i)];
        for (int j = i + 1; j <= n_; ++j) a_[static_cast<std::size_t>(j)] = a_[static_cast<std::size_t>(j - i)];
        p_ = i;
      }
      if (n_ % p_ != 0) continue;
      PeriodicWord w{Word(a_.begin() + 1, a_.end()), p_};
      if (base_.admissible_cycle(w.word)) return w;
    }
  }

  std::vector<PeriodicWord> next_chunk(std::size_t size) {
    std::vector<PeriodicWord> out;
    while (out.size() < size) {
      auto w = next();
      if (!w) break;
      out.push_back(std::move(*w));
    }
    return out;
  }

 private:
  SymbolicBase base_;
  int n_;
  std::vector<int> a_;
  int p_ = 1;
  bool started_ = false;
  bool done_ = false;
};

inline std::vector<PeriodicWord> periodic_words(const SymbolicBase& base, int n) {
  PeriodicWordStream s(base, n);
  std::vector<PeriodicWord> out;
  while (auto w = s.next()) out.push_back(std::move(*w));
  return out;
}

// Least rotation of w, the shift s with w = rotation of the representative by
// s, and the primitive root length.
struct RotationClass {
  Word representative;
  int shift = 0;
  int period = 0;
};

inline RotationClass rotation_class(const Word& w) {
  const int n = static_cast<int>(w.size());
  RotationClass rc;
  rc.representative = w;
  for (int s = 1; s < n; ++s) {
    Word r(w.begin() + s, w.end());
    r.insert(r.end(), w.begin(), w.begin() + s);
    if (r < rc.representative) rc.representative = std::move(r);
  }
  rc.period = n;
  for (int p = 1; p < n; ++p) {
    if (n % p != 0) continue;
    bool ok = true;
    for (int i = p; i < n && ok; ++i) ok = w[static_cast<std::size_t>(i)] == w[static_cast<std::size_t>(i - p)];
    if (ok) {
      rc.period = p;
      break;
    }
  }
  // w[i] = rep[(i + s) mod n]
  for (int s = 0; s < n; ++s) {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) ok = w[static_cast<std::size_t>(i)] == rc.representative[static_cast<std::size_t>((i + s) % n)];
    if (ok) {
      rc.shift = s;
      break;
    }
  }
  return rc;
}

// The return map of a periodic leaf replaced by a given map (a local
// perturbation of the skew product near that leaf). `root` is the least
// rotation of a primitive word; leaves root^k return by the k-th iterate.
struct LeafOverride {
  Word root;
  SmoothMap1D map;
};

// One-step skew product over a symbolic base with circle fibers ℝ/Lℤ: the
// fiber over a point in rectangle i is mapped by fibers[i].
struct SkewProduct {
  SymbolicBase base;
  std::vector<SmoothMap1D> fibers;
  double L = 1;
  std::vector<LeafOverride> overrides;

  void validate() const {
    base.validate();
    if (fibers.size() != static_cast<std::size_t>(base.m)) throw ArgumentError("skew product needs one fiber map per symbol");
    for (const auto& f : fibers) {
      if (!f.is_circle() || std::fabs(f.period() - L) > 1e-12) throw ArgumentError("fiber map '" + f.name() + "' is not a map of the circle of length " + std::to_string(L));
      f.check_diffeomorphism(f.domain().lo, f.domain().hi, 2048);
    }
  }
};

namespace detail {

// The inverse of an increasing circle map as a SmoothMap1D.
inline SmoothMap1D inverse_map(const SmoothMap1D& f) {
  auto p = std::make_shared<SmoothMap1D>(f);
  return SmoothMap1D([p](double y) { return p->inverse(y); }, [p](const Series<double>& s) { return p->apply_inverse(s); }, f.domain(),
                     f.name() + "^-1");
}

inline SmoothMap1D compose_word(const SkewProduct& skew, const Word& w, std::size_t begin, std::size_t end) {
  SmoothMap1D out = skew.fibers[static_cast<std::size_t>(w[begin])];
  for (std::size_t i = begin + 1; i < end; ++i) out = SmoothMap1D::compose(skew.fibers[static_cast<std::size_t>(w[i])], out);
  return out;
}

// k-th iterate of an increasing degree-one circle map. Its displacement has
// the sign of the map's own, so a sign-exact displacement hook carries over.
inline SmoothMap1D iterate_map(const SmoothMap1D& R, int k) {
  if (k == 1) return R;
  SmoothMap1D out = R;
  for (int i = 1; i < k; ++i) out = SmoothMap1D::compose(R, out);
  SmoothMap1D::Hooks h = R.hooks();
  if (h.multiplier_deviation) {
    auto base = h.multiplier_deviation;
    h.multiplier_deviation = [base, k](double x) {
      // λ^k − 1 from λ − 1 = dev (valid at fixed points of R).
      const LogMagnitude dev = base(x);
      if (dev.sign == 0) return dev;
      if (dev.log10abs > -12) return LogMagnitude::of(std::expm1(k * std::log1p(dev.value())));
      return LogMagnitude{dev.sign, dev.log10abs + std::log10(static_cast<double>(k))};
    };
  }
  out.set_hooks(h);
  return out;
}

// P∘R∘P^{-1} for an increasing P. The displacement at y = P(x) is
// P(R(x)) − P(x), which has the sign of R(x) − x, so R's sign-exact hooks
// transfer: the displacement becomes P'(x)·(R(x) − x) to first order, and the
// multiplier deviation R'(x) − 1 picks up R'(x)·(P'(R(x))/P'(x) − 1) ≈
// R'(x)·P''(x)/P'(x)·(R(x) − x), which vanishes at fixed points. Hook values
// below the normal range are sign-only stand-ins and carry no correction.
inline SmoothMap1D conjugate_map(const SmoothMap1D& P, const SmoothMap1D& R) {
  SmoothMap1D out = SmoothMap1D::compose(P, SmoothMap1D::compose(R, inverse_map(P)));
  const SmoothMap1D::Hooks& rh = R.hooks();
  if (!rh.displacement) return out;
  auto p = std::make_shared<SmoothMap1D>(P);
  auto r = std::make_shared<SmoothMap1D>(R);
  auto whole = std::make_shared<SmoothMap1D>(out);
  constexpr double near_identity = 1e-12;
  const double tiny = 4 * std::numeric_limits<double>::min();
  SmoothMap1D::Hooks h = rh;
  h.displacement = [p, r, whole, tiny](double y) {
    const double x = p->inverse(y);
    const double d = r->displacement(x);
    if (std::fabs(d) > near_identity) return (*whole)(y) - y;
    if (std::fabs(d) < tiny) return d;
    const double v = p->derivative(x) * d;
    return std::fabs(v) < tiny ? d : v;
  };
  h.multiplier_deviation = [p, r, whole, tiny](double y) {
    const double x = p->inverse(y);
    const double d = r->displacement(x);
    if (std::fabs(d) > near_identity) return LogMagnitude::of(whole->derivative(y) - 1.0);
    const LogMagnitude dev = r->multiplier_deviation(x);
    if (std::fabs(d) < tiny) return dev;
    const Series<double> pj = p->jet_at(x, 2);
    const double corr = r->derivative(x) * 2 * pj[2] / pj[1] * d;
    if (dev.sign == 0 || dev.log10abs < -300) return corr == 0 ? dev : LogMagnitude::of(corr);
    return LogMagnitude::of(dev.value() + corr);
  };
  if (rh.feature_scale > 0) {
    h.feature_lo = P(rh.feature_lo);
    h.feature_hi = P(rh.feature_hi);
    h.feature_scale = rh.feature_scale * std::min(P.derivative(rh.feature_lo), P.derivative(rh.feature_hi));
  }
  out.set_hooks(h);
  return out;
}

}  // namespace detail

// Return map g_{w_n}∘…∘g_{w_1} of the periodic leaf with itinerary w.
inline SmoothMap1D fiber_return(const Word& w, const SkewProduct& skew) {
  if (w.empty()) throw ArgumentError("fiber_return: empty word");
  if (!skew.base.admissible_cycle(w)) throw ArgumentError("fiber_return: word " + word_text(w) + " is not admissible");
  if (!skew.overrides.empty()) {
    const RotationClass rc = rotation_class(w);
    const Word root(rc.representative.begin(), rc.representative.begin() + rc.period);
    for (const auto& ov : skew.overrides) {
      if (ov.root != root) continue;
      const int k = static_cast<int>(w.size()) / rc.period;
      SmoothMap1D R = detail::iterate_map(ov.map, k);
      const int s = rc.shift % rc.period;
      if (s == 0) return R;
      // w = rotation of root^k by s: conjugate by the first s fiber maps.
      const SmoothMap1D P = detail::compose_word(skew, rc.representative, 0, static_cast<std::size_t>(s));
      return detail::conjugate_map(P, R);
    }
  }
  return detail::compose_word(skew, w, 0, w.size());
}

// A and S of a map at x from its 3-jet.
struct LocalInvariants {
  double A = 0, S = 0;
};

inline LocalInvariants local_invariants(const SmoothMap1D& f, double x) {
  const Series<double> j = f.jet_at(x, 3);
  const double a = 2 * j[2] / j[1];
  return {a, 6 * j[3] / j[1] - 1.5 * a * a};
}

struct FiberCountOptions {
  FixedPointOptions fixed_points;
  int sign_samples = 0;  // > 0: sample A and S of the map on the region
};

struct FiberCount {
  std::vector<HyperbolicFixedPoint> points;
  std::vector<ClusterWarning> clusters;
  int hyperbolic = 0;
  int non_hyperbolic = 0;
  // Extremes of A and S over the sampled region (NaN when not requested).
  double A_min = std::numeric_limits<double>::quiet_NaN(), A_max = A_min;
  double S_min = A_min, S_max = A_min;
};

// Fixed points of a fiber (return) map in [lo, hi], classified, optionally
// with the signs of A and S along the region.
inline FiberCount count_fiber_fixed_points(const SmoothMap1D& f, double lo, double hi, const FiberCountOptions& opt = {}) {
  FiberCount out;
  FixedPointReport rep = find_fixed_points_report(f, lo, hi, opt.fixed_points);
  out.points = std::move(rep.points);
  out.clusters = std::move(rep.clusters);
  for (const auto& p : out.points) (p.hyperbolic() ? out.hyperbolic : out.non_hyperbolic)++;
  if (opt.sign_samples > 0) {
    out.A_min = out.S_min = std::numeric_limits<double>::infinity();
    out.A_max = out.S_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < opt.sign_samples; ++i) {
      const double x = lo + (hi - lo) * (i + 0.5) / opt.sign_samples;
      const LocalInvariants li = local_invariants(f, x);
      out.A_min = std::min(out.A_min, li.A);
      out.A_max = std::max(out.A_max, li.A);
      out.S_min = std::min(out.S_min, li.S);
      out.S_max = std::max(out.S_max, li.S);
    }
  }
  return out;
}

// Sign certificate attached to a growth count: on the region X, each return
// map has A > 0 (or S < 0) wherever the orbit of the sample stays inside the
// domain D on which every fiber map has that property. Samples whose orbit
// leaves D cannot be periodic points in X and are tallied as escaping.
struct SignCertificate {
  enum class Kind { none, nonlinearity_positive, schwarzian_negative };
  Kind kind = Kind::none;
  double x_lo = 0, x_hi = 0;  // X
  double d_lo = 0, d_hi = 0;  // D ⊇ X
  int samples = 64;
};

inline const char* to_string(SignCertificate::Kind k) {
  switch (k) {
    case SignCertificate::Kind::nonlinearity_positive:
      return "A>0";
    case SignCertificate::Kind::schwarzian_negative:
      return "S<0";
    default:
      return "none";
  }
}

struct GrowthOptions {
  int workers = 1;
  long budget = 10'000'000;  // maximal number of leaf return maps examined
  FixedPointOptions fixed_points;
  SignCertificate certificate;
};

// Counts for one period n.
struct GrowthRow {
  int period = 0;
  long words = 0;   // periodic leaves of period n (admissible cyclic words)
  long leaves = 0;  // rotation classes examined
  long fixed_points = 0;
  long hyperbolic = 0;
  long non_hyperbolic = 0;
  int max_per_fiber = 0;
  int max_in_region = 0;  // fixed points of one return map inside X
  long clusters = 0;
  long cert_samples = 0;
  long cert_certified = 0;
  long cert_escaping = 0;
  long cert_failures = 0;        // samples with the wrong sign
  long cert_point_failures = 0;  // fixed points in X with the wrong sign or an orbit leaving D
  long overridden = 0;           // leaves whose return map was replaced

  double certified_fraction() const { return cert_samples ? static_cast<double>(cert_certified) / static_cast<double>(cert_samples) : 0.0; }
};

struct GrowthSeries {
  std::vector<GrowthRow> rows;
  bool truncated = false;
  int truncated_at = 0;  // first period not computed
  SignCertificate::Kind certificate = SignCertificate::Kind::none;

  bool certificate_holds() const {
    for (const auto& r : rows)
      if (r.cert_failures || r.cert_point_failures) return false;
    return true;
  }
};

namespace detail {

struct LeafResult {
  int count = 0, hyperbolic = 0, non_hyperbolic = 0, in_region = 0;
  long clusters = 0;
  long samples = 0, certified = 0, escaping = 0, failures = 0, point_failures = 0;
  bool overridden = false;
};

inline bool in_interval(double x, double lo, double hi) { return x >= lo && x <= hi; }

// Orbit of y under the factors of w stays in [lo, hi] (the fiber coordinate
// taken in the fundamental domain of the first fiber map).
inline bool orbit_stays(const SkewProduct& skew, const Word& w, double y, double lo, double hi) {
  if (!in_interval(y, lo, hi)) return false;
  for (int s : w) {
    y = skew.fibers[static_cast<std::size_t>(s)](y);
    if (!in_interval(y, lo, hi)) return false;
  }
  return true;
}

inline bool sign_ok(SignCertificate::Kind k, const LocalInvariants& li) {
  if (k == SignCertificate::Kind::nonlinearity_positive) return li.A > 0;
  if (k == SignCertificate::Kind::schwarzian_negative) return li.S < 0;
  return true;
}

inline LeafResult examine_leaf(const SkewProduct& skew, const PeriodicWord& pw, double lo, double hi, const GrowthOptions& opt) {
  LeafResult r;
  const SmoothMap1D R = fiber_return(pw.word, skew);
  const FixedPointReport rep = find_fixed_points_report(R, lo, hi, opt.fixed_points);
  r.count = static_cast<int>(rep.points.size());
  r.clusters = static_cast<long>(rep.clusters.size());
  const auto& cert = opt.certificate;
  const bool certify = cert.kind != SignCertificate::Kind::none;
  const RotationClass rc = rotation_class(pw.word);
  for (const auto& ov : skew.overrides)
    if (ov.root == Word(rc.representative.begin(), rc.representative.begin() + rc.period)) r.overridden = true;
  for (const auto& p : rep.points) {
    (p.hyperbolic() ? r.hyperbolic : r.non_hyperbolic)++;
    if (certify && in_interval(p.p, cert.x_lo, cert.x_hi)) {
      ++r.in_region;
      if (r.overridden) continue;
      if (!orbit_stays(skew, pw.word, p.p, cert.d_lo, cert.d_hi) || !sign_ok(cert.kind, local_invariants(R, p.p))) ++r.point_failures;
    }
  }
  if (certify && !r.overridden) {
    for (int i = 0; i < cert.samples; ++i) {
      const double y = cert.x_lo + (cert.x_hi - cert.x_lo) * (i + 0.5) / cert.samples;
      ++r.samples;
      if (!orbit_stays(skew, pw.word, y, cert.d_lo, cert.d_hi)) {
        ++r.escaping;
        continue;
      }
      if (sign_ok(cert.kind, local_invariants(R, y))) {
        ++r.certified;
      } else {
        ++r.failures;
      }
    }
  }
  return r;
}

}  // namespace detail

// Periodic-point counts of the skew product for periods 1..N_max: every
// rotation class of admissible words is examined once (in parallel chunks)
// and weighted by its orbit size. Totals do not depend on the worker count.
// When the work budget would be exceeded the series stops before that period
// and is marked truncated.
inline GrowthSeries growth_series(const SkewProduct& skew, int N_max, double lo, double hi, const GrowthOptions& opt = {}) {
  if (N_max < 1) throw ArgumentError("growth_series: N_max must be >= 1");
  skew.validate();
  GrowthSeries out;
  out.certificate = opt.certificate.kind;
  long spent = 0;
  const int workers = std::max(1, opt.workers);
  for (int n = 1; n <= N_max; ++n) {
    const std::vector<PeriodicWord> reps = periodic_words(skew.base, n);
    if (spent + static_cast<long>(reps.size()) > opt.budget) {
      out.truncated = true;
      out.truncated_at = n;
      break;
    }
    spent += static_cast<long>(reps.size());
    std::vector<detail::LeafResult> results(reps.size());
    const std::size_t chunks = std::min<std::size_t>(reps.size(), static_cast<std::size_t>(workers) * 4);
    for (std::size_t c0 = 0; c0 < chunks; c0 += static_cast<std::size_t>(workers)) {
      std::vector<std::future<void>> running;
      for (std::size_t c = c0; c < std::min(chunks, c0 + static_cast<std::size_t>(workers)); ++c) {
        running.push_back(std::async(std::launch::async, [&, c] {
          for (std::size_t i = c; i < reps.size(); i += chunks) results[i] = detail::examine_leaf(skew, reps[i], lo, hi, opt);
        }));
      }
      for (auto& f : running) f.get();
    }
    GrowthRow row;
    row.period = n;
    row.leaves = static_cast<long>(reps.size());
    for (std::size_t i = 0; i < reps.size(); ++i) {
      const long w = reps[i].period;
      const auto& r = results[i];
      row.words += w;
      row.fixed_points += w * r.count;
      row.hyperbolic += w * r.hyperbolic;
      row.non_hyperbolic += w * r.non_hyperbolic;
      row.max_per_fiber = std::max(row.max_per_fiber, r.count);
      row.max_in_region = std::max(row.max_in_region, r.in_region);
      row.clusters += r.clusters;
      row.cert_samples += r.samples;
      row.cert_certified += r.certified;
      row.cert_escaping += r.escaping;
      row.cert_failures += r.failures;
      row.cert_point_failures += r.point_failures;
      row.overridden += r.overridden ? 1 : 0;
    }
    out.rows.push_back(row);
  }
  return out;
}

// CSV: period, words, fixed_points, hyperbolic, max_per_fiber.
inline void write_growth_csv(std::ostream& os, const GrowthSeries& s) {
  os << "period,words,fixed_points,hyperbolic,max_per_fiber\n";
  for (const auto& r : s.rows) os << r.period << ',' << r.words << ',' << r.fixed_points << ',' << r.hyperbolic << ',' << r.max_per_fiber << '\n';
}

// Growth verdict. The constant C is fitted robustly as the median of
// total_n / rate^n; the series is bounded when every total stays below
// envelope·C·rate^n, otherwise the first period exceeding it is the witness.
struct GrowthClass {
  bool bounded = true;
  double C = 0;         // fitted constant
  double rate = 0;
  double envelope = 0;  // bound constant = envelope factor × C
  int witness = 0;      // first exceeding period (0 when bounded)
};

inline GrowthClass classify_growth(const GrowthSeries& s, double base_rate, double envelope_factor = 10) {
  if (s.rows.empty()) throw ArgumentError("classify_growth: empty series");
  if (!(base_rate > 0) || !(envelope_factor >= 1)) throw ArgumentError("classify_growth: rate must be positive and the envelope factor >= 1");
  std::vector<double> logs;
  for (const auto& r : s.rows) logs.push_back(std::log(std::max<double>(1, static_cast<double>(r.fixed_points))) - r.period * std::log(base_rate));
  std::vector<double> sorted = logs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = sorted.size();
  const double med = k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
  GrowthClass g;
  g.C = std::exp(med);
  g.rate = base_rate;
  g.envelope = envelope_factor * g.C;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (logs[i] > med + std::log(envelope_factor)) {
      g.bounded = false;
      g.witness = s.rows[i].period;
      break;
    }
  }
  return g;
}

}  // namespace phflat
