#pragma once

#include "zqoc/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace zqoc {

struct ScanSettings {
  double t_max = 50.0;
  double step = 0.01;
  double tol = 1e-10;
  bool all_roots = false;

  void validate() const {
    if (!(t_max > 0) || !std::isfinite(t_max))
      throw Error(ErrorKind::invalid_argument, "scan: t_max must be positive");
    if (!(step > 0) || step > t_max)
      throw Error(ErrorKind::invalid_argument, "scan: step must lie in (0, t_max]");
    if (!(tol > 0)) throw Error(ErrorKind::invalid_argument, "scan: tol must be positive");
  }
};

struct ScanPoint {
  double value = 0.0;
  bool branch_cut = false;
};

struct ScanResult {
  std::vector<double> roots;
  int rejected = 0;  // sign changes that were jumps, not zeros
  int flagged = 0;   // accepted roots whose bracket touched a log branch cut
};

namespace detail {

template <class F>
ScanPoint checked_eval(F& f, double t) {
  ScanPoint p = f(t);
  if (!std::isfinite(p.value))
    throw Error(ErrorKind::numerical, "residual is not finite at T = " + std::to_string(t));
  return p;
}

inline bool opposite(double a, double b) { return (a < 0) != (b < 0); }

}  // namespace detail

/// Uniform scan of f over (0, t_max] with bisection on each sign change.
template <class F>
ScanResult scan_roots(F&& f, const ScanSettings& s) {
  s.validate();
  ScanResult out;

  auto refine = [&](double a, ScanPoint fa, double b, ScanPoint fb) {
    const double slope0 = std::abs(fb.value - fa.value) / (b - a);
    bool flagged = fa.branch_cut || fb.branch_cut;
    while (b - a > s.tol) {
      const double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      const ScanPoint fm = detail::checked_eval(f, m);
      flagged = flagged || fm.branch_cut;
      if (fm.value == 0.0) {
        out.roots.push_back(m);
        if (flagged) ++out.flagged;
        return true;
      }
      if (detail::opposite(fa.value, fm.value)) {
        b = m;
        fb = fm;
      } else {
        a = m;
        fa = fm;
      }
    }
    const double jump = std::abs(fb.value - fa.value);
    const bool continuous = std::abs(fa.value) + std::abs(fb.value) <= 1e-6 ||
                            jump <= 1e3 * slope0 * (b - a);
    if (!continuous) {
      ++out.rejected;
      return false;
    }
    out.roots.push_back(a - fa.value * (b - a) / (fb.value - fa.value));
    if (flagged) ++out.flagged;
    return true;
  };

  double t_prev = 1e-6 * s.step;
  ScanPoint p_prev = detail::checked_eval(f, t_prev);
  const auto count = static_cast<long>(std::ceil(s.t_max / s.step - 1e-12));
  for (long j = 1; j <= count; ++j) {
    const double t = std::min(s.t_max, static_cast<double>(j) * s.step);
    const ScanPoint p = detail::checked_eval(f, t);
    bool found = false;
    if (p_prev.value == 0.0) {
      out.roots.push_back(t_prev);
      found = true;
    } else if (p.value == 0.0) {
      out.roots.push_back(t);
      found = true;
    } else if (detail::opposite(p_prev.value, p.value)) {
      found = refine(t_prev, p_prev, t, p);
    }
    if (found && !s.all_roots) break;
    t_prev = t;
    p_prev = p;
  }

  std::sort(out.roots.begin(), out.roots.end());
  std::vector<double> merged;
  for (double r : out.roots)
    if (merged.empty() || r - merged.back() > tolerances.root_merge) merged.push_back(r);
  out.roots = std::move(merged);
  return out;
}

/// Bisection for an increasing function with g(lo) < 0 < g(hi).
template <class G>
double bisect_increasing(G&& g, double lo, double hi, int max_iter = 400) {
  for (int k = 0; k < max_iter; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) < 0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 4e-16 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace zqoc
