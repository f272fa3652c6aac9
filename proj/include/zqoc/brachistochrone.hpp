#pragma once

#include "zqoc/algebra.hpp"
#include "zqoc/roots.hpp"

#include <functional>
#include <variant>
#include <vector>

namespace zqoc {

/// exp(t W) for a fixed drift W, from one Hermitian eigendecomposition.
class DriftFlow {
 public:
  explicit DriftFlow(const AlgebraElement& w) {
    Matrix h = w.hamiltonian();
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success)
      throw Error(ErrorKind::numerical, "drift eigensolver failed");
    v_ = es.eigenvectors();
    e_ = es.eigenvalues();
  }

  GroupElement at(double t) const {
    const Eigen::VectorXcd phase = (-I_unit * t * e_.cast<cplx>()).array().exp();
    return GroupElement::trusted(v_ * phase.asDiagonal() * v_.adjoint());
  }

  /// exp(tW) A exp(-tW).
  AlgebraElement conjugate(double t, const AlgebraElement& a) const {
    return adjoint_action(at(t), a);
  }

 private:
  Matrix v_;
  Vector e_;
};

struct OptimalTime {
  double T = 0.0;
  std::vector<double> roots;
  int rejected = 0;
  int flagged = 0;
};

namespace detail {

inline void check_pair(const AlgebraElement& drift, const GroupElement& gate) {
  if (drift.dim() != gate.dim())
    throw Error(ErrorKind::invalid_argument, "drift and gate dimensions differ");
}

inline bool is_identity_gate(const GroupElement& gate) {
  return logm_su(gate).value.matrix().norm() <= 1e-12;
}

inline OptimalTime from_scan(ScanResult r, const ScanSettings& s) {
  if (r.roots.empty())
    throw Error(ErrorKind::no_root, "no root in (0, " + std::to_string(s.t_max) +
                                        "]; raise t_max" +
                                        (r.rejected ? " (branch-cut jumps skipped)" : ""));
  OptimalTime out;
  out.T = r.roots.front();
  out.roots = std::move(r.roots);
  out.rejected = r.rejected;
  out.flagged = r.flagged;
  return out;
}

template <class Size>
OptimalTime solve_time(const AlgebraElement& drift, const GroupElement& gate, Size&& size,
                       const ScanSettings& scan) {
  if (is_identity_gate(gate)) return OptimalTime{0.0, {0.0}, 0, 0};
  const DriftFlow flow(drift);
  auto f = [&](double t) {
    const SuLog l = logm_su(flow.at(-t) * gate);
    return ScanPoint{size(l.value, t), l.near_branch_cut};
  };
  return from_scan(scan_roots(f, scan), scan);
}

}  // namespace detail

/// Smallest T > 0 with kappa-Killing norm of log(exp(iT H0) O) equal to T.
inline OptimalTime optimal_time(const AlgebraElement& drift, const GroupElement& gate,
                                const KillingMultiple& k, const ScanSettings& scan = {}) {
  detail::check_pair(drift, gate);
  const ConstraintNorm h(k);
  const double w2 = inner(h, drift, drift);
  if (w2 >= 1.0 - tolerances.weak_wind)
    throw Error(ErrorKind::strong_wind, "kappa Tr(H0^2) = " + std::to_string(w2));
  auto size = [&](const AlgebraElement& l, double t) { return inner(h, l, l) / (t * t) - 1.0; };
  return detail::solve_time(drift, gate, size, scan);
}

/// Smallest T > 0 with Schatten norm of log(exp(iT H0) O) equal to T.
inline OptimalTime optimal_time_schatten(const AlgebraElement& drift, const GroupElement& gate,
                                         const SchattenP& sp, const ScanSettings& scan = {}) {
  detail::check_pair(drift, gate);
  const ConstraintNorm h(sp);
  const double w = schatten(h, drift);
  if (w >= 1.0 - tolerances.weak_wind)
    throw Error(ErrorKind::strong_wind, "Schatten norm of the drift = " + std::to_string(w));
  auto size = [&](const AlgebraElement& l, double t) { return schatten(h, l) / t - 1.0; };
  return detail::solve_time(drift, gate, size, scan);
}

/// Dispatches on the constraint variant; Gram constraints have no closed form.
inline OptimalTime optimal_time(const AlgebraElement& drift, const GroupElement& gate,
                                const ConstraintNorm& h, const ScanSettings& scan = {}) {
  if (auto k = std::get_if<KillingMultiple>(&h.variant())) return optimal_time(drift, gate, *k, scan);
  if (auto s = std::get_if<SchattenP>(&h.variant()))
    return optimal_time_schatten(drift, gate, *s, scan);
  throw Error(ErrorKind::invalid_variant, "closed-form optimal time needs a bi-invariant constraint");
}

struct ClosedFormTime {
  double T = 0.0;
  bool from_scan = false;  // closed form rejected, scan used instead
};

/// Quadratic-formula optimal time for a drift commuting with the gate.
inline ClosedFormTime optimal_time_commuting(const AlgebraElement& drift, const GroupElement& gate,
                                             double kappa, const ScanSettings& scan = {}) {
  detail::check_pair(drift, gate);
  const Matrix h0 = drift.hamiltonian();
  const Matrix& o = gate.matrix();
  if ((h0 * o - o * h0).norm() > tolerances.commuting)
    throw Error(ErrorKind::not_commuting, "drift does not commute with the gate");
  const ConstraintNorm h(KillingMultiple{kappa});
  const double w2 = inner(h, drift, drift);
  if (w2 >= 1.0 - tolerances.weak_wind)
    throw Error(ErrorKind::strong_wind, "kappa Tr(H0^2) = " + std::to_string(w2));
  if (detail::is_identity_gate(gate)) return {0.0, false};

  const Matrix l0 = logm_su(gate).value.matrix();
  const cplx tr_hl = (h0 * l0).trace();
  const cplx tr_l2 = (l0 * l0).trace();
  const double a = kappa * std::real((h0 * h0).trace()) - 1.0;
  const cplx first = I_unit * kappa * tr_hl / a;
  const cplx root = std::sqrt(kappa * tr_l2 / a - kappa * kappa * tr_hl * tr_hl / (a * a));

  double best = -1.0;
  for (const cplx t : {first + root, first - root}) {
    if (std::abs(t.imag()) > tolerances.imaginary_residue || !(t.real() > 0)) continue;
    if (best < 0 || t.real() < best) best = t.real();
  }
  if (best > 0) {
    const DriftFlow flow(drift);
    const AlgebraElement l = logm_su(flow.at(-best) * gate).value;
    if (std::abs(inner(h, l, l) / (best * best) - 1.0) <= tolerances.imaginary_residue)
      return {best, false};
  }
  return {optimal_time(drift, gate, KillingMultiple{kappa}, scan).T, true};
}

/// (1/T) log(exp(iT H0) O).
inline SuLog geodesic_direction(const AlgebraElement& drift, const GroupElement& gate, double T) {
  detail::check_pair(drift, gate);
  if (!(T > 0)) throw Error(ErrorKind::invalid_argument, "geodesic_direction needs T > 0");
  SuLog l = logm_su(expm(-T * drift) * gate);
  l.value = l.value * (1.0 / T);
  return l;
}

struct GeodesicSolution {
  double T_opt = 0.0;
  AlgebraElement direction;  // i D
  AlgebraElement drift;      // W = -i H0
  GroupElement gate;
  ConstraintNorm constraint;
  std::vector<double> roots;
  bool near_branch_cut = false;
};

/// Optimal time, direction and invariant checks under a bi-invariant constraint.
inline GeodesicSolution solve_geodesic(const AlgebraElement& drift, const GroupElement& gate,
                                       const ConstraintNorm& h, const ScanSettings& scan = {}) {
  const OptimalTime t = optimal_time(drift, gate, h, scan);
  GeodesicSolution sol{t.T, AlgebraElement::zero(drift.dim()), drift, gate, h, t.roots, false};
  if (t.T == 0.0) return sol;
  const SuLog d = geodesic_direction(drift, gate, t.T);
  sol.direction = d.value;
  sol.near_branch_cut = d.near_branch_cut;
  const double speed = norm(h, sol.direction);
  if (std::abs(speed - 1.0) > tolerances.unit_speed * std::max(1.0, 1.0 / t.T))
    throw Error(ErrorKind::numerical, "unit speed violated by " + std::to_string(speed - 1.0));
  const double end =
      (expm(t.T * drift).matrix() * expm(t.T * sol.direction).matrix() - gate.matrix()).norm();
  if (end > tolerances.endpoint)
    throw Error(ErrorKind::numerical, "endpoint residual " + std::to_string(end));
  return sol;
}

inline GroupElement trajectory_at(const GeodesicSolution& sol, double t) {
  const double slack = 1e-12 * std::max(1.0, sol.T_opt);
  if (t < -slack || t > sol.T_opt + slack)
    throw Error(ErrorKind::out_of_range, "t outside [0, T_opt]");
  return expm(t * sol.drift) * expm(t * sol.direction);
}

/// -i Hc(t) = exp(tW) (i D) exp(-tW).
inline AlgebraElement control_hamiltonian_at(const GeodesicSolution& sol, double t) {
  return adjoint_action(expm(t * sol.drift), sol.direction);
}

struct ControlSchedule {
  std::vector<double> times;
  std::vector<AlgebraElement> hamiltonians;  // -i Hc(t_j)
  std::vector<Vector> fields;
  std::vector<std::string> labels;
  std::vector<double> constraint_values;  // h(-i Hc, -i Hc), or the Schatten norm
};

inline std::vector<double> uniform_grid(double T, int samples) {
  if (samples < 1) throw Error(ErrorKind::invalid_argument, "grid needs at least one sample");
  std::vector<double> g(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j)
    g[std::size_t(j)] = samples == 1 ? 0.0 : T * static_cast<double>(j) / (samples - 1);
  return g;
}

inline double constraint_value(const ConstraintNorm& h, const AlgebraElement& a) {
  return h.is_inner_product() ? inner(h, a, a) : schatten(h, a);
}

inline ControlSchedule control_fields(const GeodesicSolution& sol, const Basis& basis,
                                      const std::vector<double>& grid) {
  const DriftFlow flow(sol.drift);
  ControlSchedule s;
  s.labels = basis.labels();
  for (double t : grid) {
    AlgebraElement hc = flow.conjugate(t, sol.direction);
    s.times.push_back(t);
    s.fields.push_back(basis.coordinates(hc));
    s.constraint_values.push_back(constraint_value(sol.constraint, hc));
    s.hamiltonians.push_back(std::move(hc));
  }
  return s;
}

/// Truncated BCH series for i D. Order counts commutator degree; the printed
/// series ends at degree 4, so orders 5 and 6 return the degree-4 sum.
inline AlgebraElement bch_direction(const AlgebraElement& drift, const GroupElement& gate,
                                    double T, int order) {
  detail::check_pair(drift, gate);
  if (order < 1 || order > 6) throw Error(ErrorKind::invalid_argument, "BCH order must be 1..6");
  if (!(T > 0)) throw Error(ErrorKind::invalid_argument, "bch_direction needs T > 0");
  const AlgebraElement x = -drift;  // i H0
  const AlgebraElement y = logm_su(gate).value;
  AlgebraElement z = x + y * (1.0 / T);
  if (order < 2) return z;
  const AlgebraElement xy = commutator(x, y);
  z += 0.5 * xy;
  if (order < 3) return z;
  const AlgebraElement xxy = commutator(x, xy);
  z += (T / 12.0) * xxy;
  z += (-1.0 / 12.0) * commutator(y, xy);
  if (order < 4) return z;
  z += (-T / 24.0) * commutator(y, xxy);
  return z;
}

using HamiltonianFn = std::function<AlgebraElement(double)>;

inline int default_steps(double T) {
  return static_cast<int>(std::max(1e4, std::ceil(T / 1e-3)));
}

/// Product of midpoint exponentials for dU/dt = A(t) U.
inline GroupElement propagate(const HamiltonianFn& fn, double T, int steps) {
  if (steps < 1) throw Error(ErrorKind::invalid_argument, "propagate needs steps >= 1");
  if (!(T >= 0)) throw Error(ErrorKind::invalid_argument, "propagate needs T >= 0");
  const double dt = T / steps;
  Matrix u;
  for (int j = 0; j < steps; ++j) {
    const AlgebraElement a = fn((j + 0.5) * dt);
    if (j == 0) u = Matrix::Identity(a.dim(), a.dim());
    u = expm(dt * a).matrix() * u;
  }
  return GroupElement::trusted(u);
}

inline bool constant_control_optimal(const AlgebraElement& drift, const GroupElement& gate) {
  detail::check_pair(drift, gate);
  const Matrix h0 = drift.hamiltonian();
  return (h0 * gate.matrix() - gate.matrix() * h0).norm() <= tolerances.commuting;
}

struct ConstantControlCheck {
  double drift_gate = 0.0;       // |[H0, O]|_F
  double drift_direction = 0.0;  // |[H0, D]|_F at the solution
  bool optimal = false;
  bool consistent = true;
};

inline ConstantControlCheck constant_control_check(const GeodesicSolution& sol) {
  ConstantControlCheck c;
  const Matrix h0 = sol.drift.hamiltonian();
  const Matrix& o = sol.gate.matrix();
  const Matrix& d = sol.direction.matrix();
  c.drift_gate = (h0 * o - o * h0).norm();
  c.drift_direction = (h0 * d - d * h0).norm();
  c.optimal = c.drift_gate <= tolerances.commuting;
  c.consistent = c.optimal == (c.drift_direction <= 1e-8);
  return c;
}

// ---------------------------------------------------------------------------
// reference models

/// Drift -(Bx sx + By sy), control amplitude D, kappa = 1 / (2 D^2).
struct SingleSpin {
  double bx = 0.25;
  double by = 0.25;
  double d = 1.0 / std::numbers::sqrt2;
};

/// Two-spin exchange drift -J (XX + YY + ZZ), kappa = 1.
struct XXXChain {
  double j = 0.1;
};

using ReferenceModel = std::variant<SingleSpin, XXXChain>;

inline Matrix model_hamiltonian(const SingleSpin& m) {
  return -(m.bx * pauli('x') + m.by * pauli('y'));
}

inline Matrix model_hamiltonian(const XXXChain& m) {
  Matrix h = Matrix::Zero(4, 4);
  for (char c : {'x', 'y', 'z'}) h += kron(pauli(c), pauli(c));
  return -m.j * h;
}

inline double model_kappa(const SingleSpin& m) { return 1.0 / (2.0 * m.d * m.d); }
inline double model_kappa(const XXXChain&) { return 1.0; }

/// -i sy
inline GroupElement single_spin_gate() { return GroupElement::trusted(-I_unit * pauli('y')); }

/// Swap with the global phase removed.
inline GroupElement swap_gate() {
  Matrix s = Matrix::Zero(4, 4);
  s(0, 0) = s(1, 2) = s(2, 1) = s(3, 3) = 1.0;
  return project_su(s);
}

/// Optimal time using constant controls only.
inline double reference_time_independent(const ReferenceModel& model) {
  constexpr double half_pi = std::numbers::pi / 2;
  std::vector<double> cand;
  if (auto s = std::get_if<SingleSpin>(&model)) {
    const double gap = s->d * s->d - s->bx * s->bx - s->by * s->by;
    if (!(gap > 0) || !std::isfinite(gap))
      throw Error(ErrorKind::domain, "single spin needs D^2 > Bx^2 + By^2");
    const double r = std::sqrt(s->by * s->by + gap);
    cand = {half_pi * (s->by + r) / gap, half_pi * (s->by - r) / gap};
  } else {
    const double j = std::get<XXXChain>(model).j;
    const double s3 = std::sqrt(3.0);
    cand = {half_pi * s3 / (2 * s3 * j + 1), half_pi * s3 / (2 * s3 * j - 1)};
  }
  double best = -1.0;
  for (double c : cand)
    if (c > 0 && std::isfinite(c) && (best < 0 || c < best)) best = c;
  if (best < 0) throw Error(ErrorKind::domain, "no positive constant-control time");
  return best;
}

}  // namespace zqoc
