#pragma once

#include "zqoc/algebra.hpp"
#include "zqoc/roots.hpp"

#include <variant>
#include <vector>

namespace zqoc {

/// Navigation data (h, W) with a weak wind.
class NavigationData {
 public:
  NavigationData(ConstraintNorm h, AlgebraElement drift) : h_(std::move(h)), w_(std::move(drift)) {
    const double size = h_.is_inner_product() ? inner(h_, w_, w_) : schatten(h_, w_);
    if (size >= 1.0 - tolerances.weak_wind)
      throw Error(ErrorKind::strong_wind,
                  "drift size " + std::to_string(size) + " is not below 1 under the constraint");
  }

  const ConstraintNorm& constraint() const { return h_; }
  const AlgebraElement& drift() const { return w_; }

 private:
  ConstraintNorm h_;
  AlgebraElement w_;
};

/// F(y) = sqrt(x' alpha x) + beta' x over basis coordinates x of y.
struct RandersData {
  double lambda = 1.0;
  RealMatrix alpha;
  Vector beta;
  Basis basis;

  double norm_components(const Vector& x) const {
    return std::sqrt(std::max(0.0, x.dot(alpha * x))) + beta.dot(x);
  }
  double norm(const AlgebraElement& y) const { return norm_components(basis.coordinates(y)); }
  /// Gradient of F in coordinates; undefined at the origin.
  Vector gradient_components(const Vector& x) const {
    const Vector ax = alpha * x;
    const double a = std::sqrt(x.dot(ax));
    if (!(a > 0)) throw Error(ErrorKind::domain, "Randers gradient at the origin");
    return ax / a + beta;
  }
};

inline double randers_norm(const RandersData& f, const AlgebraElement& a) { return f.norm(a); }

inline RandersData build_randers(const NavigationData& nav, const Basis& basis) {
  const ConstraintNorm& h = nav.constraint();
  if (!h.is_inner_product())
    throw Error(ErrorKind::invalid_variant, "Randers data needs an inner-product constraint");
  if (basis.dim() != nav.drift().dim())
    throw Error(ErrorKind::invalid_argument, "basis and drift dimensions differ");
  const AlgebraElement& w = nav.drift();
  const Eigen::Index m = basis.size();
  RandersData r;
  r.lambda = 1.0 - inner(h, w, w);
  if (r.lambda <= tolerances.weak_wind)
    throw Error(ErrorKind::strong_wind, "1 - h(W,W) = " + std::to_string(r.lambda));
  r.beta = Vector(m);
  for (Eigen::Index d = 0; d < m; ++d) r.beta(d) = -inner(h, basis.element(d), w) / r.lambda;
  r.alpha = RealMatrix(m, m);
  for (Eigen::Index d = 0; d < m; ++d)
    for (Eigen::Index e = d; e < m; ++e)
      r.alpha(d, e) = r.alpha(e, d) =
          inner(h, basis.element(d), basis.element(e)) / r.lambda + r.beta(d) * r.beta(e);
  r.basis = basis;
  return r;
}

/// The tau > 0 with norm_h(A / tau - W) = 1; zero for A = 0.
inline double finsler_navigation_norm(const NavigationData& nav, const AlgebraElement& a) {
  const ConstraintNorm& h = nav.constraint();
  const AlgebraElement& w = nav.drift();
  const double fa = norm(h, a);
  if (fa == 0.0) return 0.0;
  // s -> norm(s A - W) - 1 is convex, negative at 0, so its positive root is unique.
  auto g = [&](double s) { return norm(h, a * s - w) - 1.0; };
  const double s = bisect_increasing(g, 0.0, 3.0 / fa);
  const double tau = 1.0 / s;
  if (!(tau >= 1e-12 && tau <= 1e12))
    throw Error(ErrorKind::no_root, "navigation norm outside [1e-12, 1e12]");
  return tau;
}

struct NavigationMetric {
  NavigationData nav;
  Basis basis;
};

using Metric = std::variant<RandersData, NavigationMetric>;

inline const Basis& metric_basis(const Metric& m) {
  if (auto r = std::get_if<RandersData>(&m)) return r->basis;
  return std::get<NavigationMetric>(m).basis;
}

inline double metric_norm(const Metric& m, const AlgebraElement& y) {
  if (auto r = std::get_if<RandersData>(&m)) return r->norm(y);
  return finsler_navigation_norm(std::get<NavigationMetric>(m).nav, y);
}

inline double metric_norm_components(const Metric& m, const Vector& x) {
  if (auto r = std::get_if<RandersData>(&m)) return r->norm_components(x);
  const auto& nm = std::get<NavigationMetric>(m);
  return finsler_navigation_norm(nm.nav, nm.basis.compose(x));
}

/// Time-stamped samples of a curve, as velocities (dU/dt U^dag) or as points.
class CurveSamples {
 public:
  static CurveSamples from_velocities(std::vector<double> t, std::vector<AlgebraElement> v) {
    check_times(t, v.size());
    CurveSamples c;
    c.t_ = std::move(t);
    c.v_ = std::move(v);
    return c;
  }

  /// Velocities by finite differences of U(t) U(t)^dag.
  static CurveSamples from_points(std::vector<double> t, const std::vector<GroupElement>& u) {
    check_times(t, u.size());
    const std::size_t n = u.size();
    std::vector<AlgebraElement> v;
    if (n == 1) {
      v.push_back(AlgebraElement::zero(u[0].dim()));
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t lo = j == 0 ? 0 : j - 1;
        const std::size_t hi = j + 1 == n ? j : j + 1;
        const Matrix d = (u[hi].matrix() - u[lo].matrix()) / (t[hi] - t[lo]);
        v.push_back(AlgebraElement::project(d * u[j].matrix().adjoint()));
      }
    }
    return from_velocities(std::move(t), std::move(v));
  }

  const std::vector<double>& times() const { return t_; }
  const std::vector<AlgebraElement>& velocities() const { return v_; }

 private:
  static void check_times(const std::vector<double>& t, std::size_t count) {
    if (t.empty() || t.size() != count)
      throw Error(ErrorKind::invalid_argument, "curve needs matching, non-empty samples");
    for (std::size_t j = 1; j < t.size(); ++j)
      if (!(t[j] > t[j - 1]))
        throw Error(ErrorKind::invalid_argument, "curve times must increase strictly");
  }

  std::vector<double> t_;
  std::vector<AlgebraElement> v_;
};

/// Trapezoid rule for the integral of F(velocity).
inline double traversal_time(const Metric& m, const CurveSamples& c) {
  const auto& t = c.times();
  const auto& v = c.velocities();
  double total = 0.0;
  double prev = metric_norm(m, v[0]);
  for (std::size_t j = 1; j < t.size(); ++j) {
    const double cur = metric_norm(m, v[j]);
    total += 0.5 * (prev + cur) * (t[j] - t[j - 1]);
    prev = cur;
  }
  return total;
}

/// g_ij(X) = (1/2) d^2 F^2 / dx_i dx_j by central second differences.
inline RealMatrix fundamental_tensor(const Metric& m, const AlgebraElement& y) {
  if (y.matrix().norm() < 1e-8)
    throw Error(ErrorKind::domain, "fundamental tensor is undefined at the origin");
  const Vector x = metric_basis(m).coordinates(y);
  const Eigen::Index k = x.size();
  const double step = tolerances.fd_step * std::max(1.0, x.norm());
  auto f2 = [&](const Vector& z) {
    const double f = metric_norm_components(m, z);
    return f * f;
  };
  RealMatrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) {
      Vector pp = x, pm = x, mp = x, mm = x;
      pp(i) += step; pp(j) += step;
      pm(i) += step; pm(j) -= step;
      mp(i) -= step; mp(j) += step;
      mm(i) -= step; mm(j) -= step;
      g(i, j) = g(j, i) = (f2(pp) - f2(pm) - f2(mp) + f2(mm)) / (8.0 * step * step);
    }
  return g;
}

struct GeodesicVectorCheck {
  bool is_geodesic = false;
  Vector residuals;
  double max_residual = 0.0;
};

/// Tests g_X(X, [X, B_k]) = 0 for every basis element, with X scaled to F(X) = 1.
inline GeodesicVectorCheck is_geodesic_vector(const Metric& m, const AlgebraElement& x,
                                              double tol = 1e-5) {
  const Basis& basis = metric_basis(m);
  if (x.matrix().norm() < 1e-8)
    throw Error(ErrorKind::domain, "geodesic-vector test is undefined at the origin");
  const AlgebraElement y = x * (1.0 / metric_norm(m, x));
  const RealMatrix g = fundamental_tensor(m, y);
  const Vector gx = g * basis.coordinates(y);
  GeodesicVectorCheck out;
  out.residuals = Vector(basis.size());
  for (Eigen::Index k = 0; k < basis.size(); ++k)
    out.residuals(k) = gx.dot(basis.coordinates(commutator(y, basis.element(k))));
  out.max_residual = out.residuals.cwiseAbs().maxCoeff();
  out.is_geodesic = out.max_residual <= tol;
  return out;
}

}  // namespace zqoc
