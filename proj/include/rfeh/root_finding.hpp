#pragma once

// Bracket-then-polish scalar root finding. Functions may return +/-inf to
// signal "far above"/"far below" a root; only the sign is used while
// bisecting, so such sentinels still bracket correctly.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace rfeh::roots {

struct Sample {
  double x;
  double f;
};

struct Bracket {
  Sample lo;
  Sample hi;
};

inline int sign_of(double f) { return f > 0.0 ? 1 : (f < 0.0 ? -1 : 0); }

/// Evaluate f on `xs` and return every adjacent pair with a sign change, plus
/// degenerate brackets at samples where f is exactly zero. NaNs never
/// bracket.
template <class F>
std::vector<Bracket> scan_brackets(F&& f, const std::vector<double>& xs, std::vector<Sample>* samples = nullptr) {
  std::vector<Sample> s;
  s.reserve(xs.size());
  for (double x : xs) s.push_back({x, f(x)});
  std::vector<Bracket> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].f == 0.0) {
      out.push_back({s[i], s[i]});
      continue;
    }
    if (i + 1 < s.size() && !std::isnan(s[i].f) && !std::isnan(s[i + 1].f) && s[i + 1].f != 0.0 &&
        sign_of(s[i].f) != sign_of(s[i + 1].f)) {
      out.push_back({s[i], s[i + 1]});
    }
  }
  if (samples != nullptr) *samples = std::move(s);
  return out;
}

struct RefineOptions {
  double width = 1e-12;      // stop bisecting below this bracket width
  int newton_steps = 10;     // polish steps after bisection
};

/// Bisect to `width`, then polish with secant-style Newton steps using a
/// finite-difference slope. Newton steps that leave the bracket or fail to
/// reduce |f| are rejected. Returns the best point found.
template <class F>
Sample refine(F&& f, Bracket b, const RefineOptions& opt = {}) {
  if (b.lo.f == 0.0) return b.lo;
  if (b.hi.f == 0.0) return b.hi;
  const int s_lo = sign_of(b.lo.f);
  Sample lo = b.lo;
  Sample hi = b.hi;
  for (int guard = 0; guard < 400 && std::abs(hi.x - lo.x) > opt.width; ++guard) {
    const double mid = 0.5 * (lo.x + hi.x);
    if (mid == lo.x || mid == hi.x) break;
    const double fm = f(mid);
    if (fm == 0.0) return {mid, fm};
    if (std::isnan(fm)) break;
    if (sign_of(fm) == s_lo) {
      lo = {mid, fm};
    } else {
      hi = {mid, fm};
    }
  }
  Sample best = std::abs(lo.f) <= std::abs(hi.f) ? lo : hi;
  if (!std::isfinite(best.f)) {
    best = std::isfinite(lo.f) ? lo : hi;
  }
  const double a = std::min(b.lo.x, b.hi.x);
  const double c = std::max(b.lo.x, b.hi.x);
  for (int k = 0; k < opt.newton_steps && std::isfinite(best.f) && best.f != 0.0; ++k) {
    const double h = std::max(opt.width, 1e-9 * (c - a));
    const double xa = std::max(a, best.x - h);
    const double xb = std::min(c, best.x + h);
    if (!(xb > xa)) break;
    const double fa = f(xa);
    const double fb = f(xb);
    const double slope = (fb - fa) / (xb - xa);
    if (!std::isfinite(slope) || slope == 0.0) break;
    const double x = best.x - best.f / slope;
    if (!(x >= a && x <= c)) break;
    const double fx = f(x);
    if (!(std::abs(fx) < std::abs(best.f))) break;
    best = {x, fx};
  }
  return best;
}

}  // namespace rfeh::roots
