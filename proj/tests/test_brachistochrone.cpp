#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace zqoc;
using namespace zqoc::testing;
using Catch::Approx;

namespace {

const ConstraintNorm killing1(KillingMultiple{1.0});

GroupElement z_rotation(double theta) { return expm(AlgebraElement::from_hamiltonian(theta * sz())); }

/// Shortest constant-control time for H0 = b.sigma, gate -i sy, kappa Tr(Hc^2) <= 1, by
/// enumerating the generators T (H0 + Hc) = phi n.sigma that exponentiate to the gate.
/// Without both_branches only rotations about +y are tried.
double brute_constant_control(double bx, double by, double kappa, bool both_branches = true) {
  const Eigen::Vector3d b(-bx, -by, 0.0);
  double best_s = 0.0;
  for (int k = 0; k < 6; ++k)
    for (int sign : {1, -1}) {
      if (sign < 0 && !both_branches) continue;
      const double phi = pi / 2 + 2 * pi * k + (sign < 0 ? pi : 0.0);
      const Eigen::Vector3d n(0.0, sign, 0.0);
      // 2 kappa |phi s n - b|^2 = 1 in s = 1/T
      const double qa = phi * phi, qb = -2 * phi * n.dot(b), qc = b.squaredNorm() - 0.5 / kappa;
      const double disc = qb * qb - 4 * qa * qc;
      if (disc < 0) continue;
      for (double s : {(-qb + std::sqrt(disc)) / (2 * qa), (-qb - std::sqrt(disc)) / (2 * qa)})
        if (s > best_s) best_s = s;
    }
  return 1.0 / best_s;
}

double direction_error(const AlgebraElement& a, const AlgebraElement& b) {
  return dist(a.matrix(), b.matrix());
}

}  // namespace

TEST_CASE("optimal times against the independent oracle") {
  const GroupElement gy = single_spin_gate();
  CHECK(optimal_time(spin_drift(0.25, 0.25), gy, killing1).T == Approx(3.204324983670261).epsilon(1e-10));
  CHECK(optimal_time(AlgebraElement::from_hamiltonian((sx() + sy()) / 4.0), gy, killing1).T ==
        Approx(1.654266570425506).epsilon(1e-10));
  CHECK(optimal_time(xxx_drift(0.1), swap_gate(), killing1).T == Approx(2.020705966220896).epsilon(1e-10));
  CHECK(optimal_time(xxx_drift(-0.1), swap_gate(), killing1).T == Approx(4.162700957304844).epsilon(1e-10));
}

TEST_CASE("zero drift gives the length of the gate logarithm") {
  const OptimalTime t = optimal_time(AlgebraElement::zero(2), single_spin_gate(), killing1);
  CHECK(t.T == Approx(pi / std::sqrt(2.0)).epsilon(1e-12));
  for (double kappa : {0.25, 2.0})
    CHECK(optimal_time(AlgebraElement::zero(2), single_spin_gate(), KillingMultiple{kappa}).T ==
          Approx(std::sqrt(kappa) * pi / std::sqrt(2.0)).epsilon(1e-10));
  CHECK(optimal_time(spin_drift(0.1, 0.2), GroupElement::identity(2), killing1).T == 0.0);
}

TEST_CASE("commuting closed form matches the scan") {
  int points = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 5; ++j) {
      const double a = -0.6 + 1.2 * i / 9.0;
      const double theta = 0.3 + 0.5 * j;
      const AlgebraElement w = AlgebraElement::from_hamiltonian(a * sz());
      const GroupElement gate = z_rotation(theta);
      const ClosedFormTime cf = optimal_time_commuting(w, gate, 1.0);
      const OptimalTime scan = optimal_time(w, gate, killing1);
      REQUIRE(cf.T == Approx(scan.T).epsilon(1e-8));
      ++points;
    }
  CHECK(points == 50);
  const ClosedFormTime ex = optimal_time_commuting(AlgebraElement::from_hamiltonian(0.25 * sz()),
                                                   GroupElement(-I_unit * sz()), 1.0);
  CHECK(ex.T == Approx(1.641192349351).epsilon(1e-10));
  CHECK_FALSE(ex.from_scan);
  try {
    optimal_time_commuting(spin_drift(0.1, 0.1), z_rotation(0.5), 1.0);
    FAIL("non-commuting pair accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_commuting);
  }
}

TEST_CASE("Schatten constraints") {
  std::mt19937_64 rng(31);
  for (int j = 0; j < 5; ++j) {
    const double kappa = 0.5 + 0.3 * j;
    const AlgebraElement w = random_algebra(rng, 2, 0.3 / std::sqrt(kappa));
    const GroupElement g = random_group(rng, 2);
    const double tk = optimal_time(w, g, KillingMultiple{kappa}).T;
    const double ts = optimal_time(w, g, ConstraintNorm(SchattenP{2.0, std::sqrt(kappa)})).T;
    CHECK(ts == Approx(tk).epsilon(1e-9));
  }
  CHECK(optimal_time_schatten(AlgebraElement::zero(2), single_spin_gate(), SchattenP{1.0, 1.0}).T ==
        Approx(pi).epsilon(1e-10));
  CHECK(optimal_time_schatten(AlgebraElement::zero(2), single_spin_gate(),
                              SchattenP{std::numeric_limits<double>::infinity(), 1.0})
            .T == Approx(pi / 2).epsilon(1e-10));
  RealMatrix g = RealMatrix::Identity(3, 3);
  try {
    optimal_time(AlgebraElement::zero(2), single_spin_gate(), ConstraintNorm(GramMetric{g}));
    FAIL("Gram constraint accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_variant);
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(optimal_time(AlgebraElement::zero(3), single_spin_gate(), killing1), Error);
  try {
    optimal_time(spin_drift(0.75, 0.0), single_spin_gate(), killing1);
    FAIL("strong wind accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::strong_wind);
  }
  try {
    optimal_time(spin_drift(0.25, 0.25), single_spin_gate(), killing1, ScanSettings{1.0, 0.01});
    FAIL("root found below t_max = 1");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::no_root);
  }
  CHECK_THROWS_AS(optimal_time(spin_drift(0.1, 0.1), single_spin_gate(), killing1, ScanSettings{-1.0}),
                  Error);
  CHECK_THROWS_AS(geodesic_direction(spin_drift(0.1, 0.1), single_spin_gate(), 0.0), Error);
}

TEST_CASE("all_roots lists later solutions") {
  ScanSettings s;
  s.all_roots = true;
  s.t_max = 20;
  const OptimalTime t = optimal_time(spin_drift(0.25, 0.25), single_spin_gate(), killing1, s);
  REQUIRE_FALSE(t.roots.empty());
  CHECK(t.T == t.roots.front());
  CHECK(std::is_sorted(t.roots.begin(), t.roots.end()));
  const AlgebraElement w = spin_drift(0.25, 0.25);
  for (double r : t.roots) {
    const AlgebraElement l = logm_su(expm(-r * w) * single_spin_gate()).value;
    CHECK(inner(killing1, l, l) / (r * r) == Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("geodesic solution is unit speed and reaches the gate") {
  const GeodesicSolution sol = solve_geodesic(spin_drift(0.25, 0.25), single_spin_gate(), killing1);
  CHECK(norm(killing1, sol.direction) == Approx(1.0).margin(1e-9));
  CHECK(dist(trajectory_at(sol, sol.T_opt).matrix(), single_spin_gate().matrix()) < 1e-8);
  CHECK(dist(trajectory_at(sol, 0.0).matrix(), Matrix::Identity(2, 2)) < 1e-15);
  try {
    trajectory_at(sol, sol.T_opt * 1.01);
    FAIL("t past T_opt accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::out_of_range);
  }
  CHECK_THROWS_AS(trajectory_at(sol, -0.1), Error);

  const Basis b = generator_basis(2, GeneratorKind::gell_mann, killing1);
  const ControlSchedule s = control_fields(sol, b, uniform_grid(sol.T_opt, 101));
  REQUIRE(s.fields.size() == 101);
  CHECK(s.labels == std::vector<std::string>{"sx", "sy", "sz"});
  for (std::size_t j = 0; j < s.times.size(); ++j) {
    CHECK(s.constraint_values[j] == Approx(1.0).margin(1e-12));
    CHECK(s.fields[j].squaredNorm() == Approx(0.5).margin(1e-12));
    CHECK(dist(s.hamiltonians[j].matrix(), control_hamiltonian_at(sol, s.times[j]).matrix()) < 1e-13);
  }
}

TEST_CASE("direction for a pure gate and a commuting drift") {
  const AlgebraElement d = geodesic_direction(AlgebraElement::zero(2), single_spin_gate(), 2.0).value;
  CHECK(dist(d.matrix(), -I_unit * (pi / 4) * sy()) < 1e-14);
  const AlgebraElement w = AlgebraElement::from_hamiltonian(0.2 * sz());
  const AlgebraElement dz = geodesic_direction(w, z_rotation(1.0), 3.0).value;
  CHECK(dist(dz.matrix(), (-I_unit * (1.0 - 0.6) / 3.0 * sz()).eval()) < 1e-13);
}

TEST_CASE("swap under the XXX drift uses only the exchange fields") {
  const Basis b = generator_basis(4, GeneratorKind::tensor_pauli, killing1);
  for (double j : {0.1, -0.1, 0.0}) {
    const GeodesicSolution sol = solve_geodesic(xxx_drift(j), swap_gate(), killing1);
    const ControlSchedule s = control_fields(sol, b, uniform_grid(sol.T_opt, 11));
    for (const Vector& f : s.fields) {
      for (Eigen::Index k = 0; k < f.size(); ++k) {
        const std::string& l = b.label(k);
        if (l == "sxx" || l == "syy" || l == "szz") {
          CHECK(f(k) == Approx(f(b.size() - 1)).margin(1e-12));
          CHECK(std::abs(f(k)) > 0.1);
        } else {
          CHECK(std::abs(f(k)) < 1e-12);
        }
      }
    }
    const ConstantControlCheck c = constant_control_check(sol);
    CHECK(c.optimal);
    CHECK(c.consistent);
    CHECK(constant_control_optimal(xxx_drift(j), swap_gate()));
  }
}

TEST_CASE("constant-control optimality tracks commutation") {
  const GeodesicSolution sol = solve_geodesic(spin_drift(0.25, 0.25), single_spin_gate(), killing1);
  const ConstantControlCheck c = constant_control_check(sol);
  CHECK_FALSE(c.optimal);
  CHECK(c.consistent);
  CHECK(c.drift_direction > 1e-3);
  CHECK_FALSE(constant_control_optimal(sol.drift, sol.gate));
}

TEST_CASE("reference constant-control times") {
  for (double bx : {0.0, 0.1, 0.25})
    for (double by : {-0.2, 0.0, 0.25, 0.4}) {
      const SingleSpin m{bx, by, 1.0 / std::sqrt(2.0)};
      CHECK(reference_time_independent(m) ==
            Approx(brute_constant_control(bx, by, 1.0, false)).epsilon(1e-12));
      CHECK(reference_time_independent(m) >= brute_constant_control(bx, by, 1.0) - 1e-12);
      CHECK(reference_time_independent(m) >=
            optimal_time(spin_drift(bx, by), single_spin_gate(), killing1).T - 1e-9);
    }
  const SingleSpin d1{0.3, 0.1, 1.0};
  CHECK(reference_time_independent(d1) ==
        Approx(brute_constant_control(0.3, 0.1, model_kappa(d1), false)).epsilon(1e-12));
  CHECK(reference_time_independent(XXXChain{0.0}) == Approx(pi / 2 * std::sqrt(3.0)));
  CHECK(optimal_time(xxx_drift(0.0), swap_gate(), killing1).T == Approx(pi / 2 * std::sqrt(3.0)));
  CHECK(reference_time_independent(XXXChain{0.1}) ==
        Approx(optimal_time(xxx_drift(0.1), swap_gate(), killing1).T).epsilon(1e-9));
  try {
    reference_time_independent(SingleSpin{0.6, 0.6, 0.5});
    FAIL("strong field accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
  CHECK_THROWS_AS(reference_time_independent(XXXChain{-1.0 / std::sqrt(12.0)}), Error);
}

TEST_CASE("model conventions") {
  CHECK(dist(model_hamiltonian(SingleSpin{0.25, 0.5, 1.0}), Matrix(-(0.25 * sx() + 0.5 * sy()))) == 0.0);
  const Matrix xx = kron(sx(), sx()) + kron(sy(), sy()) + kron(sz(), sz());
  CHECK(dist(model_hamiltonian(XXXChain{0.1}), Matrix(-0.1 * xx)) < 1e-15);
  CHECK(model_kappa(SingleSpin{0.25, 0.25, 1.0 / std::sqrt(2.0)}) == Approx(1.0));
  CHECK(model_kappa(XXXChain{}) == 1.0);
  CHECK(std::abs(swap_gate().matrix().determinant() - 1.0) < 1e-14);
}

TEST_CASE("BCH series is exact for a commuting drift") {
  const AlgebraElement w = AlgebraElement::from_hamiltonian(0.2 * sz());
  const GroupElement g = z_rotation(0.7);
  const AlgebraElement exact = geodesic_direction(w, g, 1.3).value;
  for (int order = 1; order <= 6; ++order)
    CHECK(direction_error(bch_direction(w, g, 1.3, order), exact) < 1e-14);
  CHECK_THROWS_AS(bch_direction(w, g, 1.3, 0), Error);
  CHECK_THROWS_AS(bch_direction(w, g, 1.3, 7), Error);
}

TEST_CASE("BCH series converges for a small gate") {
  std::mt19937_64 rng(32);
  const AlgebraElement w = random_algebra(rng, 3, 0.05);
  const GroupElement g = expm(random_algebra(rng, 3, 0.1));
  const double T = 1.0;
  const AlgebraElement exact = geodesic_direction(w, g, T).value;
  std::vector<double> err;
  for (int order = 1; order <= 4; ++order) err.push_back(direction_error(bch_direction(w, g, T, order), exact));
  for (std::size_t k = 1; k < err.size(); ++k) CHECK(err[k] < 0.2 * err[k - 1]);
  CHECK(err.back() < 1e-6);
  CHECK(direction_error(bch_direction(w, g, T, 6), bch_direction(w, g, T, 4)) == 0.0);
}

TEST_CASE("BCH errors on the weak-field single spin") {
  const AlgebraElement w = spin_drift(0.05, 0.05);
  const GroupElement g = single_spin_gate();
  const double T = optimal_time(w, g, killing1).T;
  const AlgebraElement exact = geodesic_direction(w, g, T).value;
  const double frozen[] = {1.392929694561e-01, 7.162544153679e-02, 1.930855490069e-02, 1.732126493759e-02};
  for (int order = 1; order <= 4; ++order)
    CHECK(direction_error(bch_direction(w, g, T, order), exact) == Approx(frozen[order - 1]).epsilon(1e-9));
}

TEST_CASE("midpoint propagation converges at second order") {
  const GeodesicSolution sol = solve_geodesic(spin_drift(0.25, 0.25), single_spin_gate(), killing1);
  const HamiltonianFn fn = [&](double t) { return sol.drift + control_hamiltonian_at(sol, t); };
  std::vector<double> err;
  for (int steps : {50, 100, 200}) {
    const GroupElement u = propagate(fn, sol.T_opt, steps);
    err.push_back(dist(u.matrix(), sol.gate.matrix()));
  }
  CHECK(err[0] / err[1] == Approx(4.0).epsilon(0.05));
  CHECK(err[1] / err[2] == Approx(4.0).epsilon(0.05));
  CHECK(dist(propagate(fn, sol.T_opt, default_steps(sol.T_opt)).matrix(), sol.gate.matrix()) < 1e-7);
  CHECK(default_steps(3.2) == 10000);
  CHECK(default_steps(100.0) >= 100000);
  CHECK_THROWS_AS(propagate(fn, 1.0, 0), Error);
}
