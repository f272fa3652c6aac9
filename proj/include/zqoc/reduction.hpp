#pragma once

#include "zqoc/algebra.hpp"
#include "zqoc/navigation.hpp"

#include <Eigen/LU>

#include <functional>
#include <utility>
#include <vector>

namespace zqoc {

/// r_d = -C^a_{bd} m_a xi^b
inline Vector coadjoint_term(const StructureConstants& c, const Vector& m, const Vector& xi) {
  const Eigen::Index k = c.size();
  if (m.size() != k || xi.size() != k)
    throw Error(ErrorKind::invalid_argument, "state size does not match structure constants");
  Vector r = Vector::Zero(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    if (m(a) == 0.0) continue;
    for (Eigen::Index b = 0; b < k; ++b) {
      const double s = m(a) * xi(b);
      if (s == 0.0) continue;
      for (Eigen::Index d = 0; d < k; ++d) r(d) -= c(a, b, d) * s;
    }
  }
  return r;
}

/// l = (1/2) xi' G xi
class QuadraticLagrangian {
 public:
  explicit QuadraticLagrangian(RealMatrix gram) : g_(std::move(gram)) {
    if (g_.rows() != g_.cols()) throw Error(ErrorKind::invalid_argument, "Gram must be square");
    Eigen::LDLT<RealMatrix> ldlt(g_);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff()))
      throw Error(ErrorKind::singular_system, "Gram matrix is not positive definite");
  }
  Vector momentum(const Vector& xi) const { return g_ * xi; }
  RealMatrix mass(const Vector&) const { return g_; }
  double speed(const Vector& xi) const { return std::sqrt(xi.dot(g_ * xi)); }

 private:
  RealMatrix g_;
};

/// l = F^2 / 2 for Randers F; mass matrix by central differences of the momentum.
class RandersLagrangian {
 public:
  explicit RandersLagrangian(RandersData f) : f_(std::move(f)) {}
  Vector momentum(const Vector& xi) const {
    return f_.norm_components(xi) * f_.gradient_components(xi);
  }
  RealMatrix mass(const Vector& xi) const {
    const Eigen::Index k = xi.size();
    const double step = tolerances.momentum_fd_step * std::max(1.0, xi.norm());
    RealMatrix m(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      Vector up = xi, dn = xi;
      up(j) += step;
      dn(j) -= step;
      m.col(j) = (momentum(up) - momentum(dn)) / (2 * step);
    }
    return 0.5 * (m + m.transpose());
  }
  double speed(const Vector& xi) const { return f_.norm_components(xi); }
  const RandersData& data() const { return f_; }

 private:
  RandersData f_;
};

namespace detail {

inline Vector solve_mass(const RealMatrix& m, const Vector& r) {
  Eigen::FullPivLU<RealMatrix> lu(m);
  lu.setThreshold(1e-12);
  if (lu.rank() < m.rows())
    throw Error(ErrorKind::singular_system,
                "mass matrix rank " + std::to_string(lu.rank()) + " < " + std::to_string(m.rows()));
  return lu.solve(r);
}

}  // namespace detail

template <class Lagrangian>
Vector ep_rhs(const Lagrangian& l, const StructureConstants& c, const Vector& xi) {
  return detail::solve_mass(l.mass(xi), coadjoint_term(c, l.momentum(xi), xi));
}

inline Vector ep_rhs_riemannian(const RealMatrix& gram, const StructureConstants& c,
                                const Vector& xi) {
  return ep_rhs(QuadraticLagrangian(gram), c, xi);
}

inline Vector ep_rhs_randers(const RandersData& f, const StructureConstants& c, const Vector& xi) {
  if (xi.norm() < 1e-12) throw Error(ErrorKind::singular_system, "Randers EP at xi = 0");
  return ep_rhs(RandersLagrangian(f), c, xi);
}

struct EPTrajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> multipliers;  // empty unless constrained
};

using EPRhs = std::function<Vector(const Vector&)>;

namespace detail {

inline std::vector<Vector> rk4(const EPRhs& rhs, const Vector& y0, double T, int steps,
                               std::vector<double>& times) {
  if (steps < 1) throw Error(ErrorKind::invalid_argument, "ep_integrate needs steps >= 1");
  const double h = T / steps;
  std::vector<Vector> ys{y0};
  times.assign(1, 0.0);
  Vector y = y0;
  for (int j = 0; j < steps; ++j) {
    try {
      const Vector k1 = rhs(y);
      const Vector k2 = rhs(y + 0.5 * h * k1);
      const Vector k3 = rhs(y + 0.5 * h * k2);
      const Vector k4 = rhs(y + h * k3);
      y += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(j) + ": " + e.what());
    }
    if (!y.allFinite())
      throw Error(ErrorKind::numerical, "non-finite state at step " + std::to_string(j));
    ys.push_back(y);
    times.push_back(T * (j + 1) / steps);
  }
  return ys;
}

}  // namespace detail

/// Fixed-step RK4; T may be negative.
inline EPTrajectory ep_integrate(const EPRhs& rhs, const Vector& xi0, double T, int steps) {
  EPTrajectory out;
  out.states = detail::rk4(rhs, xi0, T, steps, out.times);
  return out;
}

/// U_{j+1} = exp(dt * xi_mid) U_j starting from the identity.
inline std::vector<GroupElement> reconstruct_group(const EPTrajectory& traj, const Basis& basis) {
  std::vector<GroupElement> u{GroupElement::identity(basis.dim())};
  for (std::size_t j = 1; j < traj.states.size(); ++j) {
    const double dt = traj.times[j] - traj.times[j - 1];
    const AlgebraElement mid = basis.compose(0.5 * (traj.states[j - 1] + traj.states[j]));
    u.push_back(expm(dt * mid) * u.back());
  }
  return u;
}

/// Linear constraints f_k(xi) = c_k, f_k the Killing coordinate along F_k.
struct ConstraintSet {
  std::vector<AlgebraElement> forbidden;
  std::vector<double> values;
  std::vector<double> multipliers;  // initial omega_k

  std::size_t size() const { return forbidden.size(); }

  /// Row k holds the coefficients of f_k over the basis coordinates.
  RealMatrix rows(const Basis& basis) const {
    if (values.size() != forbidden.size() || multipliers.size() != forbidden.size())
      throw Error(ErrorKind::invalid_argument, "constraint lists differ in length");
    const auto k = static_cast<Eigen::Index>(forbidden.size());
    RealMatrix p(k, basis.size());
    for (Eigen::Index r = 0; r < k; ++r) {
      const Matrix& f = forbidden[std::size_t(r)].matrix();
      const double ff = re_trace_product(f, f);
      if (ff == 0.0) throw Error(ErrorKind::invalid_argument, "zero forbidden direction");
      for (Eigen::Index a = 0; a < basis.size(); ++a)
        p(r, a) = re_trace_product(basis.element(a).matrix(), f) / ff;
    }
    if (k > 0) {
      Eigen::FullPivLU<RealMatrix> lu(p);
      if (lu.rank() < k)
        throw Error(ErrorKind::invalid_argument, "forbidden directions are linearly dependent");
    }
    return p;
  }
};

struct ConstrainedRates {
  Vector xi_dot;
  Vector omega_dot;
};

/// EP equations for l + sum omega_k (f_k - c_k) with the constraints kept fixed.
template <class Lagrangian>
ConstrainedRates constrained_ep_rhs(const Lagrangian& l, const StructureConstants& c,
                                    const RealMatrix& p, const Vector& values, const Vector& xi,
                                    const Vector& omega) {
  const Eigen::Index m = xi.size();
  const Eigen::Index k = p.rows();
  if (k > 0) {
    const double off = (p * xi - values).cwiseAbs().maxCoeff();
    if (off > tolerances.consistency)
      throw Error(ErrorKind::inconsistent_state, "constraint violated by " + std::to_string(off));
  }
  const Vector dl = l.momentum(xi) + p.transpose() * omega;
  RealMatrix sys = RealMatrix::Zero(m + k, m + k);
  sys.topLeftCorner(m, m) = l.mass(xi);
  sys.topRightCorner(m, k) = p.transpose();
  sys.bottomLeftCorner(k, m) = p;
  Vector rhs = Vector::Zero(m + k);
  rhs.head(m) = coadjoint_term(c, dl, xi);
  Eigen::FullPivLU<RealMatrix> lu(sys);
  lu.setThreshold(1e-12);
  if (lu.rank() < m + k)
    throw Error(ErrorKind::singular_system, "augmented system rank " + std::to_string(lu.rank()) +
                                                " < " + std::to_string(m + k));
  const Vector sol = lu.solve(rhs);
  return {sol.head(m), sol.tail(k)};
}

template <class Lagrangian>
ConstrainedRates constrained_ep_rhs(const Lagrangian& l, const StructureConstants& c,
                                    const Basis& basis, const ConstraintSet& cs, const Vector& xi,
                                    const Vector& omega) {
  const Vector values = Eigen::Map<const Vector>(cs.values.data(), Eigen::Index(cs.values.size()));
  return constrained_ep_rhs(l, c, cs.rows(basis), values, xi, omega);
}

template <class Lagrangian>
EPTrajectory ep_integrate_constrained(const Lagrangian& l, const StructureConstants& c,
                                      const Basis& basis, const ConstraintSet& cs,
                                      const Vector& xi0, double T, int steps) {
  const RealMatrix p = cs.rows(basis);
  const Eigen::Index m = xi0.size();
  const auto k = static_cast<Eigen::Index>(cs.size());
  const Vector values = Eigen::Map<const Vector>(cs.values.data(), k);
  Vector y0(m + k);
  y0.head(m) = xi0;
  y0.tail(k) = Eigen::Map<const Vector>(cs.multipliers.data(), k);
  if (k > 0 && (p * xi0 - values).cwiseAbs().maxCoeff() > 1e-10)
    throw Error(ErrorKind::inconsistent_state, "initial state violates the constraints");
  auto rhs = [&](const Vector& y) {
    const ConstrainedRates r = constrained_ep_rhs(l, c, p, values, y.head(m), y.tail(k));
    Vector dy(m + k);
    dy.head(m) = r.xi_dot;
    dy.tail(k) = r.omega_dot;
    return dy;
  };
  EPTrajectory out;
  const std::vector<Vector> ys = detail::rk4(rhs, y0, T, steps, out.times);
  for (const Vector& y : ys) {
    out.states.push_back(y.head(m));
    out.multipliers.push_back(y.tail(k));
  }
  return out;
}

/// Circle of radius sqrt(1 - c^2) at height c traversed at rate omega.
inline Vector su2_constrained_closed_form(double c, double a, double omega, double t) {
  const double rest = 1.0 - c * c - a * a;
  if (rest < -1e-15) throw Error(ErrorKind::domain, "c^2 + A^2 exceeds 1");
  const double s = std::sqrt(std::max(0.0, rest));
  Vector xi(3);
  xi << a * std::cos(omega * t) - s * std::sin(omega * t),
      a * std::sin(omega * t) + s * std::cos(omega * t), c;
  return xi;
}

}  // namespace zqoc
