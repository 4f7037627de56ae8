#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/expr.hpp"
#include "phflat/interval.hpp"
#include "phflat/series.hpp"

namespace phflat {

// A one-dimensional blender model: two fiber maps g_+ and g_−, the core
// interval that their images must cover, the region U_bl that orbits must
// stay in, and the interval whose images and preimages must stay inside the
// core's interior (the auxiliary inclusions).
struct BlenderSpec {
  Expr g_plus;
  Expr g_minus;
  double core_lo = -3, core_hi = 3;
  double region_lo = -3, region_hi = 3;
  double inner_lo = -2, inner_hi = 2;

  // The interval blender with maps 0.99(x + 4) − 4 and 0.99(x − 4) + 4.
  static BlenderSpec standard(const std::string& rate = "99/100") {
    BlenderSpec s;
    s.g_plus = Expr::parse(rate + "*(x+4)-4", "x");
    s.g_minus = Expr::parse(rate + "*(x-4)+4", "x");
    return s;
  }
};

// Outcome of the covering check with the enclosures that decided it.
struct BlenderReport {
  bool covers = false;
  bool auxiliary = false;
  bool degenerate = false;  // point core: decided by the common fixed point alone
  Interval plus_lo, plus_hi, minus_lo, minus_hi;  // enclosures of g_±(core ends)
  std::vector<std::string> failures;

  bool ok() const { return covers && auxiliary; }
};

namespace detail {

inline Interval derivative_enclosure(const Expr& g, const Interval& x) {
  return g.eval<Series<Interval>>(Series<Interval>::variable(x, 1))[1];
}

}  // namespace detail

// Verifies with outward-rounded interval arithmetic that
//   core ⊂ g_+(int core) ∪ g_−(int core)
// and g_±([inner]) ⊂ int core, g_±^{-1}([inner]) ⊂ int core. Both maps must
// be increasing on the core (derivative enclosure strictly positive);
// otherwise the image of the core is not determined by its end points and a
// PreconditionError is raised. For increasing maps the image of the open
// core is the open interval between the end-point images, so only end-point
// enclosures are needed: lower ends are bounded from above and upper ends
// from below. A point core {c} is covered exactly when c is a common fixed
// point of both maps; the auxiliary inclusions are then not applicable.
inline BlenderReport blender_covering_report(const BlenderSpec& spec) {
  if (!(spec.core_lo <= spec.core_hi)) throw ArgumentError("blender: empty core");
  BlenderReport rep;
  const Interval core(spec.core_lo, spec.core_hi);
  for (const auto* g : {&spec.g_plus, &spec.g_minus}) {
    const Interval d = detail::derivative_enclosure(*g, core);
    if (!(d.lower() > 0)) throw PreconditionError("blender: map " + g->text() + " is not monotone increasing on the core (derivative enclosure [" + std::to_string(d.lower()) + ", " + std::to_string(d.upper()) + "])");
  }
  const Interval a(spec.core_lo), b(spec.core_hi);
  rep.plus_lo = spec.g_plus.eval<Interval>(a);
  rep.plus_hi = spec.g_plus.eval<Interval>(b);
  rep.minus_lo = spec.g_minus.eval<Interval>(a);
  rep.minus_hi = spec.g_minus.eval<Interval>(b);

  if (spec.core_lo == spec.core_hi) {
    rep.degenerate = true;
    const double c = spec.core_lo;
    const bool fixed = rep.plus_lo.lower() == c && rep.plus_lo.upper() == c && rep.minus_lo.lower() == c && rep.minus_lo.upper() == c;
    rep.covers = fixed;
    if (!fixed) rep.failures.push_back("point core is not a common fixed point");
  } else {
    // Open images (l, u) with l known from above and u from below.
    std::vector<std::pair<double, double>> images{{rep.plus_lo.upper(), rep.plus_hi.lower()}, {rep.minus_lo.upper(), rep.minus_hi.lower()}};
    std::sort(images.begin(), images.end());
    double reach = spec.core_lo;
    bool covered = false, started = false;
    for (const auto& [l, u] : images) {
      // The first image must start strictly left of the core; later ones
      // strictly inside what is already covered (open intervals).
      if (!(l < reach)) break;
      started = true;
      reach = std::max(reach, u);
      if (reach > spec.core_hi) {
        covered = true;
        break;
      }
    }
    rep.covers = started && covered;
    if (!rep.covers) rep.failures.push_back("images of the core leave a gap (covered up to " + std::to_string(reach) + ")");
  }

  // Auxiliary inclusions (open core on both sides); vacuous for a point core.
  rep.auxiliary = true;
  if (rep.degenerate) return rep;
  const Interval inner(spec.inner_lo, spec.inner_hi);
  for (const auto* g : {&spec.g_plus, &spec.g_minus}) {
    const Interval d = detail::derivative_enclosure(*g, inner);
    if (!(d.lower() > 0)) throw PreconditionError("blender: map " + g->text() + " is not monotone increasing on the inner interval");
    const Interval lo = g->eval<Interval>(Interval(spec.inner_lo)), hi = g->eval<Interval>(Interval(spec.inner_hi));
    if (!(lo.lower() > spec.core_lo && hi.upper() < spec.core_hi)) {
      rep.auxiliary = false;
      rep.failures.push_back("image of the inner interval under " + g->text() + " is not inside the open core");
    }
    // g^{-1}([inner]) ⊂ (core) ⟺ g(core_lo) < inner_lo and g(core_hi) > inner_hi.
    const Interval at_lo = g->eval<Interval>(a), at_hi = g->eval<Interval>(b);
    if (!(at_lo.upper() < spec.inner_lo && at_hi.lower() > spec.inner_hi)) {
      rep.auxiliary = false;
      rep.failures.push_back("preimage of the inner interval under " + g->text() + " is not inside the open core");
    }
  }
  return rep;
}

inline bool blender_covering_check(const BlenderSpec& spec) { return blender_covering_report(spec).ok(); }

// Result of a tangle search: the witness word ('+' applies g_+, '−' is
// written '-'), the orbit replayed along it, and the number of states
// explored.
struct TangleWitness {
  std::string word;
  std::vector<double> orbit;  // y_start, then the image after each symbol
};

struct TangleResult {
  std::optional<TangleWitness> witness;
  std::size_t explored = 0;
  int depth_reached = 0;
};

// Breadth-first search over words in {+, −} of length ≤ depth_cap driving
// y_start into [target_lo, target_hi] with every intermediate point inside
// U_bl. States are merged on bins of width (target width)/8 — one stored
// representative per bin, reached by the shortest word found first, with g_+
// expanded before g_−. The returned word is replayed exactly from y_start
// and checked before it is reported. A target not inside the core gives no
// witness; the covering check must pass (PreconditionError otherwise).
inline TangleResult tangle_search(const BlenderSpec& spec, double y_start, double target_lo, double target_hi, int depth_cap) {
  if (!(target_lo < target_hi)) throw ArgumentError("tangle_search: empty target");
  if (depth_cap < 0) throw ArgumentError("tangle_search: negative depth cap");
  const BlenderReport rep = blender_covering_report(spec);
  if (!rep.ok()) throw PreconditionError("tangle_search: covering check failed: " + rep.failures.front());
  TangleResult out;
  if (target_lo < spec.core_lo || target_hi > spec.core_hi) return out;
  if (y_start < spec.region_lo || y_start > spec.region_hi) return out;

  auto in_target = [&](double y) { return y >= target_lo && y <= target_hi; };
  auto replay = [&](const std::string& w) -> std::optional<TangleWitness> {
    TangleWitness t;
    t.word = w;
    double y = y_start;
    t.orbit.push_back(y);
    for (char c : w) {
      y = (c == '+' ? spec.g_plus : spec.g_minus).eval<double>(y);
      if (y < spec.region_lo || y > spec.region_hi) return std::nullopt;
      t.orbit.push_back(y);
    }
    if (!in_target(y)) return std::nullopt;
    return t;
  };
  if (in_target(y_start)) {
    out.witness = replay("");
    return out;
  }

  const double bin = (target_hi - target_lo) / 8;
  const auto nbins = static_cast<std::size_t>(std::ceil((spec.region_hi - spec.region_lo) / bin)) + 1;
  auto bin_of = [&](double y) { return static_cast<std::size_t>((y - spec.region_lo) / bin); };
  struct Node {
    double y;
    long parent;
    char symbol;
  };
  std::vector<Node> nodes{{y_start, -1, 0}};
  std::vector<char> seen(nbins, 0);
  seen[bin_of(y_start)] = 1;
  std::vector<long> frontier{0};
  auto word_of = [&](long i) {
    std::string w;
    for (; nodes[static_cast<std::size_t>(i)].parent >= 0; i = nodes[static_cast<std::size_t>(i)].parent) w.push_back(nodes[static_cast<std::size_t>(i)].symbol);
    return std::string(w.rbegin(), w.rend());
  };
  for (int depth = 1; depth <= depth_cap && !frontier.empty(); ++depth) {
    out.depth_reached = depth;
    std::vector<long> next;
    for (long i : frontier) {
      for (char c : {'+', '-'}) {
        const double y = (c == '+' ? spec.g_plus : spec.g_minus).eval<double>(nodes[static_cast<std::size_t>(i)].y);
        if (y < spec.region_lo || y > spec.region_hi) continue;
        ++out.explored;
        if (in_target(y)) {
          nodes.push_back({y, i, c});
          if (auto w = replay(word_of(static_cast<long>(nodes.size()) - 1))) {
            out.witness = std::move(w);
            return out;
          }
          continue;
        }
        const std::size_t k = bin_of(y);
        if (seen[k]) continue;
        seen[k] = 1;
        nodes.push_back({y, i, c});
        next.push_back(static_cast<long>(nodes.size()) - 1);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace phflat
