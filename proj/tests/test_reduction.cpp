#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace zqoc;
using namespace zqoc::testing;
using Catch::Approx;

namespace {

const Basis& su2_basis() {
  static const Basis b = generator_basis(2, GeneratorKind::gell_mann, KillingMultiple{0.5});
  return b;
}

RealMatrix body_gram() { return Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal(); }

Vector end_state(const RealMatrix& g, const Vector& xi0, double T, int steps) {
  const StructureConstants c = structure_constants(su2_basis());
  return ep_integrate([&](const Vector& x) { return ep_rhs_riemannian(g, c, x); }, xi0, T, steps)
      .states.back();
}

Vector vec3(double a, double b, double c) { return Eigen::Vector3d(a, b, c); }

}  // namespace

TEST_CASE("bi-invariant metric gives constant velocity") {
  std::mt19937_64 rng(41);
  for (Eigen::Index n : {2, 3}) {
    const Basis b = orthonormal_basis(n, KillingMultiple{1.0});
    const StructureConstants c = structure_constants(b);
    const RealMatrix id = RealMatrix::Identity(b.size(), b.size());
    for (int j = 0; j < 20; ++j) {
      const Vector xi = b.coordinates(random_algebra(rng, n));
      CHECK(ep_rhs_riemannian(id, c, xi).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("rigid body conserves energy and Casimir") {
  const StructureConstants c = structure_constants(su2_basis());
  const RealMatrix g = body_gram();
  const Vector xi0 = vec3(0.3, 0.8, -0.5);
  const EPTrajectory tr =
      ep_integrate([&](const Vector& x) { return ep_rhs_riemannian(g, c, x); }, xi0, 10.0, 4000);
  REQUIRE(tr.states.size() == 4001);
  CHECK(tr.times.back() == 10.0);
  CHECK(tr.multipliers.empty());
  const double e0 = xi0.dot(g * xi0), c0 = (g * xi0).squaredNorm();
  double de = 0.0, dc = 0.0, moved = 0.0;
  for (const Vector& x : tr.states) {
    de = std::max(de, std::abs(x.dot(g * x) - e0));
    dc = std::max(dc, std::abs((g * x).squaredNorm() - c0));
    moved = std::max(moved, (x - xi0).norm());
  }
  CHECK(de < 1e-8 * e0);
  CHECK(dc < 1e-8 * c0);
  CHECK(moved > 0.1);
}

TEST_CASE("RK4 error falls sixteenfold per halving") {
  const RealMatrix g = body_gram();
  const Vector xi0 = vec3(0.3, 0.8, -0.5);
  const Vector ref = end_state(g, xi0, 5.0, 3200);
  const double e1 = (end_state(g, xi0, 5.0, 50) - ref).norm();
  const double e2 = (end_state(g, xi0, 5.0, 100) - ref).norm();
  CHECK(e1 / e2 > 13.0);
  CHECK(e1 / e2 < 19.0);
}

TEST_CASE("integrating backwards retraces the path") {
  const RealMatrix g = body_gram();
  const Vector xi0 = vec3(-0.2, 0.5, 0.7);
  const Vector there = end_state(g, xi0, 4.0, 2000);
  const Vector back = end_state(g, there, -4.0, 2000);
  CHECK((back - xi0).norm() < 1e-8);
}

TEST_CASE("Randers with zero wind reduces to the quadratic case") {
  const ConstraintNorm h(KillingMultiple{0.5});
  const RandersData f = build_randers(NavigationData(h, AlgebraElement::zero(2)), su2_basis());
  const StructureConstants c = structure_constants(su2_basis());
  const RealMatrix id = RealMatrix::Identity(3, 3);
  const RandersLagrangian l(f);
  const QuadraticLagrangian q(id);
  const Vector xi = vec3(0.4, -0.1, 0.9);
  CHECK((l.momentum(xi) - q.momentum(xi)).norm() < 1e-12);
  CHECK((l.mass(xi) - id).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((ep_rhs_randers(f, c, xi) - ep_rhs_riemannian(id, c, xi)).norm() < 1e-6);
  CHECK(l.speed(xi) == Approx(q.speed(xi)));
}

TEST_CASE("Randers mass matrix is the fundamental tensor") {
  const ConstraintNorm h(KillingMultiple{0.5});
  const AlgebraElement w = AlgebraElement::from_hamiltonian(0.3 * sx() - 0.2 * sz());
  const RandersData f = build_randers(NavigationData(h, w), su2_basis());
  const RandersLagrangian l(f);
  std::mt19937_64 rng(42);
  for (int j = 0; j < 20; ++j) {
    const AlgebraElement y = random_algebra(rng, 2, 0.5 + 0.2 * j);
    const RealMatrix g = fundamental_tensor(Metric(f), y);
    CHECK((l.mass(su2_basis().coordinates(y)) - g).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("Randers EP follows the time-optimal single-spin trajectory") {
  const ConstraintNorm h(KillingMultiple{1.0});
  const GeodesicSolution sol = solve_geodesic(spin_drift(0.25, 0.25), single_spin_gate(), h);
  const Basis b = orthonormal_basis(2, h);
  const RandersData f = build_randers(NavigationData(h, sol.drift), b);
  const StructureConstants c = structure_constants(b);
  const Vector xi0 = b.coordinates(sol.drift + sol.direction);
  const EPTrajectory tr =
      ep_integrate([&](const Vector& x) { return ep_rhs_randers(f, c, x); }, xi0, sol.T_opt, 2000);
  double track = 0.0, speed = 0.0;
  for (std::size_t j = 0; j < tr.states.size(); ++j) {
    const Vector expected = b.coordinates(sol.drift + control_hamiltonian_at(sol, tr.times[j]));
    track = std::max(track, (tr.states[j] - expected).norm());
    speed = std::max(speed, std::abs(f.norm_components(tr.states[j]) - 1.0));
  }
  CHECK(track < 1e-5);
  CHECK(speed < 1e-7);
  const std::vector<GroupElement> u = reconstruct_group(tr, b);
  CHECK(dist(u.back().matrix(), sol.gate.matrix()) < 1e-5);
}

TEST_CASE("constrained su(2) flow matches the closed form") {
  const StructureConstants c = structure_constants(su2_basis());
  const QuadraticLagrangian l(RealMatrix::Identity(3, 3));
  const AlgebraElement z(Matrix(I_unit * sz()));
  int cases = 0;
  for (double cz : {-0.5, 0.0, 0.3})
    for (double a : {0.2, 0.6})
      for (double omega : {-0.7, 0.5, 1.3}) {
        const ConstraintSet cs{{z}, {cz}, {omega / 2}};
        const Vector xi0 = su2_constrained_closed_form(cz, a, omega, 0.0);
        const EPTrajectory tr = ep_integrate_constrained(l, c, su2_basis(), cs, xi0, 8.0, 2000);
        REQUIRE(tr.multipliers.size() == tr.states.size());
        double worst = 0.0;
        for (std::size_t j = 0; j < tr.states.size(); j += 50)
          worst = std::max(worst,
                           (tr.states[j] - su2_constrained_closed_form(cz, a, omega, tr.times[j])).norm());
        CHECK(worst < 1e-8);
        CHECK(tr.multipliers.back()(0) == Approx(omega / 2).margin(1e-10));
        ++cases;
      }
  CHECK(cases == 18);
}

TEST_CASE("constrained right-hand side solves the KKT system") {
  const StructureConstants c = structure_constants(su2_basis());
  const QuadraticLagrangian l(body_gram());
  const ConstraintSet cs{{AlgebraElement(Matrix(I_unit * sx()))}, {0.2}, {0.1}};
  const Vector xi = vec3(0.2, 0.5, -0.3);
  const Vector om = Vector::Constant(1, 0.1);
  const ConstrainedRates r = constrained_ep_rhs(l, c, su2_basis(), cs, xi, om);
  CHECK(std::abs(r.xi_dot(0)) < 1e-14);
  const Vector mt = l.momentum(xi) + cs.rows(su2_basis()).transpose() * om;
  const Vector lhs = body_gram() * r.xi_dot + cs.rows(su2_basis()).transpose() * r.omega_dot;
  CHECK((lhs - coadjoint_term(c, mt, xi)).norm() < 1e-13);

  const ConstraintSet none{{}, {}, {}};
  const ConstrainedRates free = constrained_ep_rhs(l, c, su2_basis(), none, xi, Vector(0));
  CHECK((free.xi_dot - ep_rhs(l, c, xi)).norm() < 1e-14);
  CHECK(free.omega_dot.size() == 0);
}

TEST_CASE("reduction error cases") {
  const StructureConstants c = structure_constants(su2_basis());
  RealMatrix sing = RealMatrix::Identity(3, 3);
  sing(2, 2) = 0.0;
  try {
    QuadraticLagrangian bad(sing);
    FAIL("singular Gram accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular_system);
  }
  CHECK_THROWS_AS(QuadraticLagrangian(-RealMatrix::Identity(3, 3)), Error);
  const ConstraintNorm h(KillingMultiple{0.5});
  const RandersData f = build_randers(NavigationData(h, AlgebraElement::zero(2)), su2_basis());
  CHECK_THROWS_AS(ep_rhs_randers(f, c, Vector::Zero(3)), Error);
  CHECK_THROWS_AS(coadjoint_term(c, Vector::Zero(2), Vector::Zero(3)), Error);
  CHECK_THROWS_AS(ep_integrate([](const Vector& x) { return x; }, vec3(1, 0, 0), 1.0, 0), Error);
  try {
    ep_integrate([](const Vector& x) { return Vector(x.array().square() * 1e3); }, vec3(10, 0, 0), 1.0, 10);
    FAIL("blow-up not reported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }

  const QuadraticLagrangian l(RealMatrix::Identity(3, 3));
  const AlgebraElement z(Matrix(I_unit * sz()));
  try {
    ep_integrate_constrained(l, c, su2_basis(), ConstraintSet{{z}, {0.3}, {0.0}}, vec3(0.5, 0.5, 0.2),
                             1.0, 10);
    FAIL("inconsistent initial state accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::inconsistent_state);
  }
  CHECK_THROWS_AS(ConstraintSet({{z, z * 2.0}, {0.1, 0.2}, {0.0, 0.0}}).rows(su2_basis()), Error);
  CHECK_THROWS_AS(ConstraintSet({{z}, {0.1, 0.2}, {0.0}}).rows(su2_basis()), Error);
  CHECK_THROWS_AS(su2_constrained_closed_form(0.9, 0.9, 1.0, 0.0), Error);
}
