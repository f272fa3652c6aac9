#pragma once

#include "zqoc/brachistochrone.hpp"
#include "zqoc/io.hpp"
#include "zqoc/navigation.hpp"
#include "zqoc/reduction.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace zqoc::cli {

using io::json;

enum Exit : int {
  ok = 0,
  failure = 1,
  invalid_config = 2,
  strong_wind = 3,
  no_root = 4,
  verification_failed = 5,
};

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::strong_wind: return strong_wind;
    case ErrorKind::no_root: return no_root;
    case ErrorKind::numerical:
    case ErrorKind::singular_system:
    case ErrorKind::io: return failure;
    default: return invalid_config;
  }
}

struct Overrides {
  std::optional<int> steps;
  std::optional<double> tol;
  bool all_roots = false;
};

struct Outcome {
  int code = ok;
  json report;
};

namespace detail {

inline std::vector<std::string> field_header(const Basis& b, const std::string& prefix) {
  std::vector<std::string> h;
  for (const auto& l : b.labels()) h.push_back(prefix + l);
  return h;
}

/// Cubic Hermite interpolation of sampled field vectors.
class SampledFields {
 public:
  SampledFields(std::vector<double> t, std::vector<Vector> f) : t_(std::move(t)), f_(std::move(f)) {
    const std::size_t n = t_.size();
    for (std::size_t j = 0; j < n; ++j) {
      if (n == 1) {
        s_.push_back(Vector::Zero(f_[0].size()));
        continue;
      }
      const std::size_t lo = j == 0 ? 0 : j - 1;
      const std::size_t hi = j + 1 == n ? j : j + 1;
      s_.push_back((f_[hi] - f_[lo]) / (t_[hi] - t_[lo]));
    }
  }

  Vector at(double t) const {
    if (t_.size() == 1) return f_[0];
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t j = it == t_.begin() ? 0 : std::size_t(it - t_.begin()) - 1;
    j = std::min(j, t_.size() - 2);
    const double h = t_[j + 1] - t_[j];
    const double u = (t - t_[j]) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    const double h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u);
    const double h11 = u * u * (u - 1);
    return h00 * f_[j] + h10 * h * s_[j] + h01 * f_[j + 1] + h11 * h * s_[j + 1];
  }

 private:
  std::vector<double> t_;
  std::vector<Vector> f_;
  std::vector<Vector> s_;
};

inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ZQOC_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min<unsigned>(n, unsigned(cap));
  }
  return std::max(1u, std::min<unsigned>(n, unsigned(std::max<std::size_t>(jobs, 1))));
}

inline double unit_speed_violation(const Metric& m, const AlgebraElement& w,
                                   const std::vector<AlgebraElement>& controls) {
  double worst = 0.0;
  for (const auto& hc : controls) worst = std::max(worst, std::abs(metric_norm(m, w + hc) - 1.0));
  return worst;
}

}  // namespace detail

/// optimal time -> direction -> fields -> propagation check; writes schedule and report.
inline Outcome synthesize(const io::ProblemConfig& cfg, const std::string& prefix,
                          const Overrides& o = {}) {
  const AlgebraElement w = io::drift_of(cfg);
  const GroupElement gate = io::gate_of(cfg);
  const ConstraintNorm h = io::constraint_of(cfg);
  const Basis basis = io::basis_of(cfg);
  ScanSettings scan = io::scan_of(cfg);
  scan.all_roots = scan.all_roots || o.all_roots;
  const double tol_verify = o.tol.value_or(cfg.solver.tol_verify);

  const GeodesicSolution sol = solve_geodesic(w, gate, h, scan);
  const std::vector<double> grid =
      sol.T_opt > 0 ? uniform_grid(sol.T_opt, cfg.solver.samples) : std::vector<double>{};
  const ControlSchedule sched = control_fields(sol, basis, grid);

  const int steps = o.steps.value_or(cfg.solver.prop_steps > 0 ? cfg.solver.prop_steps
                                                               : default_steps(sol.T_opt));
  const DriftFlow flow(w);
  const GroupElement u =
      sol.T_opt > 0
          ? propagate([&](double t) { return w + flow.conjugate(t, sol.direction); }, sol.T_opt, steps)
          : GroupElement::identity(cfg.n);
  const double residual = (u.matrix() - gate.matrix()).norm();

  double constraint_violation = 0.0;
  for (double v : sched.constraint_values)
    constraint_violation = std::max(constraint_violation, std::abs(v - 1.0));
  const double speed_violation =
      detail::unit_speed_violation(io::metric_of(cfg), w, sched.hamiltonians);
  const ConstantControlCheck cc = constant_control_check(sol);

  const std::string schedule_path = prefix + ".schedule.csv";
  const std::string report_path = prefix + ".report.json";
  Outcome out;
  out.code = residual <= tol_verify ? ok : verification_failed;
  json& r = out.report;
  r["status"] = out.code == ok ? "ok" : "verification_failed";
  r["T_opt"] = sol.T_opt;
  r["roots"] = sol.roots;
  r["endpoint_residual"] = residual;
  r["constraint_max_violation"] = constraint_violation;
  r["unit_speed_max_violation"] = speed_violation;
  r["constant_control_optimal"] = cc.optimal;
  r["drift_gate_commutator"] = cc.drift_gate;
  r["drift_direction_commutator"] = cc.drift_direction;
  r["near_branch_cut"] = sol.near_branch_cut;
  r["prop_steps"] = steps;
  r["tol_verify"] = tol_verify;
  r["paths"] = {{"schedule", schedule_path}, {"report", report_path}};

  io::write_atomic(schedule_path, io::schedule_csv(sched));
  io::write_atomic(report_path, r.dump(2) + "\n");
  return out;
}

/// Lower and upper ends of a "lo:hi:step" range, expanded to points.
inline std::vector<double> parse_range(const std::string& spec) {
  const auto parts = io::split(spec, ':');
  if (parts.size() != 3) throw Error(ErrorKind::config, "range must be lo:hi:step");
  const double lo = io::parse_double(parts[0]);
  const double hi = io::parse_double(parts[1]);
  const double step = io::parse_double(parts[2]);
  if (!(step > 0) || !(hi >= lo) || !std::isfinite(hi) || !std::isfinite(lo))
    throw Error(ErrorKind::config, "range needs lo <= hi and step > 0");
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 1000000) throw Error(ErrorKind::config, "range has too many points");
  std::vector<double> pts;
  for (long k = 0; k < count; ++k) pts.push_back(lo + static_cast<double>(k) * step);
  return pts;
}

struct SweepRow {
  double param = 0.0;
  double t_dep = std::numeric_limits<double>::quiet_NaN();
  double t_indep = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

/// Time-dependent against constant-control optimal times over a model parameter.
inline std::vector<SweepRow> sweep_rows(const io::ProblemConfig& cfg, const std::string& param,
                                        const std::vector<double>& points,
                                        const Overrides& o = {}) {
  if (!cfg.model) throw Error(ErrorKind::config, "sweep needs a 'model' section");
  const io::ModelSpec base = *cfg.model;
  if (param == "b" && base.type != "single-spin")
    throw Error(ErrorKind::config, "--param b needs the single-spin model");
  if (param == "J" && base.type != "xxx") throw Error(ErrorKind::config, "--param J needs the xxx model");
  if (param != "b" && param != "J") throw Error(ErrorKind::config, "--param must be b or J");
  ScanSettings scan = io::scan_of(cfg);
  scan.all_roots = scan.all_roots || o.all_roots;

  std::vector<SweepRow> rows(points.size());
  auto eval = [&](std::size_t k) {
    SweepRow row;
    row.param = points[k];
    io::ModelSpec m = base;
    ReferenceModel ref;
    double kappa = 1.0;
    if (param == "b") {
      m.bx = m.by = row.param;
      SingleSpin s{m.bx, m.by, m.d};
      kappa = model_kappa(s);
      ref = s;
    } else {
      m.j = row.param;
      ref = XXXChain{m.j};
    }
    const GroupElement gate =
        m.type == "xxx" ? swap_gate() : single_spin_gate();
    try {
      row.t_dep = optimal_time(AlgebraElement::from_hamiltonian(io::model_hamiltonian(m)), gate,
                               KillingMultiple{kappa}, scan)
                      .T;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::strong_wind)
        row.status = "strong_wind";
      else if (e.kind() == ErrorKind::no_root)
        row.status = "no_root";
      else
        throw;
    }
    if (row.status == "ok") {
      try {
        row.t_indep = reference_time_independent(ref);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::domain) throw;
        row.status = "no_reference";
      }
    }
    rows[k] = row;
  };

  const unsigned workers = detail::worker_count(points.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned id) {
    try {
      for (std::size_t k = next++; k < points.size(); k = next++) eval(k);
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned id = 1; id < workers; ++id) pool.emplace_back(work, id);
  work(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::sort(rows.begin(), rows.end(),
            [](const SweepRow& a, const SweepRow& b) { return a.param < b.param; });
  return rows;
}

inline bool sweep_equal(const SweepRow& r) {
  return r.status == "ok" && std::abs(r.t_dep - r.t_indep) <= 1e-6 * std::max(1.0, r.t_indep);
}

inline Outcome sweep(const io::ProblemConfig& cfg, const std::string& param, const std::string& range,
                     const std::string& out_path, const Overrides& o = {}) {
  const std::vector<SweepRow> rows = sweep_rows(cfg, param, parse_range(range), o);
  std::vector<std::vector<std::string>> cells;
  int violations = 0;
  std::optional<double> eq_lo, eq_hi;
  for (const auto& r : rows) {
    const bool both = r.status == "ok";
    const bool le = both && r.t_dep <= r.t_indep + 1e-6;
    if (both && !le) ++violations;
    if (sweep_equal(r)) {
      if (!eq_lo) eq_lo = r.param;
      eq_hi = r.param;
    }
    cells.push_back({io::format_double(r.param), std::isnan(r.t_dep) ? "" : io::format_double(r.t_dep),
                     std::isnan(r.t_indep) ? "" : io::format_double(r.t_indep), r.status,
                     both ? (le ? "1" : "0") : "", both ? (sweep_equal(r) ? "1" : "0") : ""});
  }
  bool contiguous = true;
  if (eq_lo)
    for (const auto& r : rows)
      if (r.param >= *eq_lo && r.param <= *eq_hi && r.status == "ok" && !sweep_equal(r))
        contiguous = false;
  io::write_atomic(out_path, io::to_csv({param, "T_dep", "T_indep", "status", "dep_le_indep", "equal"},
                                        cells));
  Outcome out;
  json& rep = out.report;
  rep["status"] = "ok";
  rep["points"] = rows.size();
  rep["dep_gt_indep"] = violations;
  if (eq_lo) {
    rep["equality_interval"] = {*eq_lo, *eq_hi};
    rep["equality_contiguous"] = contiguous;
  } else {
    rep["equality_interval"] = nullptr;
  }
  rep["paths"] = {{"sweep", out_path}};
  return out;
}

/// Propagates a schedule CSV and checks endpoint, constraint and unit speed.
inline Outcome verify(const io::ProblemConfig& cfg, const std::string& schedule_path,
                      const Overrides& o = {}) {
  const AlgebraElement w = io::drift_of(cfg);
  const GroupElement gate = io::gate_of(cfg);
  const ConstraintNorm h = io::constraint_of(cfg);
  const Basis basis = io::basis_of(cfg);
  const io::Table table = io::parse_csv(io::read_file(schedule_path));

  std::vector<std::string> want{"t"};
  for (const auto& l : detail::field_header(basis, "f_")) want.push_back(l);
  want.push_back("constraint_check");
  if (table.header != want)
    throw Error(ErrorKind::config, "schedule header does not match the config basis");

  const auto m = basis.size();
  std::vector<double> times;
  std::vector<Vector> fields;
  std::vector<AlgebraElement> controls;
  for (const auto& row : table.rows) {
    times.push_back(row[0]);
    Vector f(m);
    for (Eigen::Index k = 0; k < m; ++k) f(k) = row[std::size_t(k + 1)];
    fields.push_back(f);
    controls.push_back(basis.compose(f));
  }
  if (!times.empty() && std::abs(times.front()) > 1e-12)
    throw Error(ErrorKind::config, "schedule must start at t = 0");
  for (std::size_t j = 1; j < times.size(); ++j)
    if (!(times[j] > times[j - 1])) throw Error(ErrorKind::config, "schedule times must increase");

  const double T = times.empty() ? 0.0 : times.back();
  const int steps =
      o.steps.value_or(cfg.solver.prop_steps > 0 ? cfg.solver.prop_steps : default_steps(T));
  GroupElement u = GroupElement::identity(cfg.n);
  if (T > 0) {
    const detail::SampledFields interp(times, fields);
    u = propagate([&](double t) { return w + basis.compose(interp.at(t)); }, T, steps);
  }
  const double residual = (u.matrix() - gate.matrix()).norm();
  const double tol_verify = o.tol.value_or(cfg.solver.tol_verify);

  double constraint_violation = 0.0;
  for (const auto& c : controls)
    constraint_violation = std::max(constraint_violation, std::abs(constraint_value(h, c) - 1.0));
  const Metric metric = io::metric_of(cfg);
  double traversal = 0.0;
  if (!times.empty()) {
    std::vector<AlgebraElement> vel;
    for (const auto& c : controls) vel.push_back(w + c);
    traversal = traversal_time(metric, CurveSamples::from_velocities(times, vel));
  }

  Outcome out;
  out.code = residual <= tol_verify ? ok : verification_failed;
  json& r = out.report;
  r["status"] = out.code == ok ? "ok" : "verification_failed";
  r["T"] = T;
  r["samples"] = times.size();
  r["endpoint_residual"] = residual;
  r["constraint_max_violation"] = constraint_violation;
  r["unit_speed_max_violation"] = detail::unit_speed_violation(metric, w, controls);
  r["traversal_time"] = traversal;
  r["prop_steps"] = steps;
  r["tol_verify"] = tol_verify;
  return out;
}

/// Traversal time of a curve given as velocity components per sample.
inline Outcome traverse(const io::ProblemConfig& cfg, const std::string& curve_path) {
  const Basis basis = io::basis_of(cfg);
  const io::Table table = io::parse_csv(io::read_file(curve_path));
  std::vector<std::string> want{"t"};
  for (const auto& l : detail::field_header(basis, "v_")) want.push_back(l);
  if (table.header != want)
    throw Error(ErrorKind::config, "curve header must be t followed by v_<label> columns");
  if (table.rows.empty()) throw Error(ErrorKind::config, "curve has no samples");
  std::vector<double> t;
  std::vector<AlgebraElement> v;
  for (const auto& row : table.rows) {
    t.push_back(row[0]);
    Vector x(basis.size());
    for (Eigen::Index k = 0; k < basis.size(); ++k) x(k) = row[std::size_t(k + 1)];
    v.push_back(basis.compose(x));
  }
  const double tt = traversal_time(io::metric_of(cfg), CurveSamples::from_velocities(t, v));
  Outcome out;
  out.report["status"] = "ok";
  out.report["traversal_time"] = tt;
  out.report["samples"] = t.size();
  out.report["duration"] = t.back() - t.front();
  return out;
}

/// Euler-Poincare integration, optionally with forbidden directions.
inline Outcome ep(const io::ProblemConfig& cfg, const std::string& prefix, const Overrides& o = {}) {
  if (!cfg.ep) throw Error(ErrorKind::config, "ep needs an 'ep' section");
  const io::EPSpec& spec = *cfg.ep;
  const AlgebraElement w = io::drift_of(cfg);
  const GroupElement gate = io::gate_of(cfg);
  const ConstraintNorm h = io::constraint_of(cfg);
  if (!h.is_inner_product())
    throw Error(ErrorKind::invalid_variant, "ep needs a killing or gram constraint");
  const Basis basis = io::basis_of(cfg);
  const auto m = basis.size();

  Vector xi0;
  double T = 0.0;
  if (!spec.xi0 || !spec.T) {
    const GeodesicSolution sol = solve_geodesic(w, gate, h, io::scan_of(cfg));
    xi0 = basis.coordinates(w + sol.direction);
    T = sol.T_opt;
  }
  if (spec.xi0) {
    if (static_cast<Eigen::Index>(spec.xi0->size()) != m)
      throw Error(ErrorKind::config, "ep.xi0 must have one entry per basis element");
    xi0 = Eigen::Map<const Vector>(spec.xi0->data(), m);
  }
  if (spec.T) T = *spec.T;
  const int steps = o.steps.value_or(spec.steps);

  ConstraintSet cs;
  std::vector<std::size_t> pinned;
  for (const auto& k : spec.constraints) {
    const auto it = std::find(basis.labels().begin(), basis.labels().end(), k.label);
    if (it == basis.labels().end()) throw Error(ErrorKind::config, "unknown basis label " + k.label);
    const auto idx = static_cast<Eigen::Index>(it - basis.labels().begin());
    pinned.push_back(std::size_t(idx));
    cs.forbidden.push_back(basis.element(idx));
    cs.multipliers.push_back(k.multiplier);
    cs.values.push_back(0.0);
  }
  const RealMatrix p = cs.rows(basis);
  const Vector f0 = p * xi0;
  for (std::size_t k = 0; k < cs.size(); ++k)
    cs.values[k] = spec.constraints[k].value.value_or(f0(Eigen::Index(k)));

  const StructureConstants c = structure_constants(basis);
  auto run = [&](const auto& lag) {
    EPTrajectory tr = cs.size() > 0
                          ? ep_integrate_constrained(lag, c, basis, cs, xi0, T, steps)
                          : ep_integrate([&](const Vector& x) { return ep_rhs(lag, c, x); }, xi0, T,
                                         steps);
    double drift = 0.0;
    const double s0 = lag.speed(tr.states.front());
    for (const auto& x : tr.states) drift = std::max(drift, std::abs(lag.speed(x) - s0));
    return std::pair{std::move(tr), drift};
  };
  auto [traj, speed_drift] =
      spec.lagrangian == "riemannian"
          ? run(QuadraticLagrangian(basis.gram()))
          : run(RandersLagrangian(build_randers(NavigationData(h, w), basis)));

  const std::vector<GroupElement> group = reconstruct_group(traj, basis);
  std::vector<std::string> header{"t"};
  for (const auto& l : detail::field_header(basis, "xi_")) header.push_back(l);
  for (const auto& k : spec.constraints) header.push_back("omega_" + k.label);
  header.push_back("endpoint_residual");
  std::vector<std::vector<std::string>> rows;
  double constraint_violation = 0.0;
  const Vector values = Eigen::Map<const Vector>(cs.values.data(), Eigen::Index(cs.size()));
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    std::vector<std::string> r{io::format_double(traj.times[j])};
    for (Eigen::Index k = 0; k < m; ++k) r.push_back(io::format_double(traj.states[j](k)));
    if (!traj.multipliers.empty())
      for (Eigen::Index k = 0; k < traj.multipliers[j].size(); ++k)
        r.push_back(io::format_double(traj.multipliers[j](k)));
    r.push_back(io::format_double((group[j].matrix() - gate.matrix()).norm()));
    rows.push_back(std::move(r));
    if (cs.size() > 0)
      constraint_violation =
          std::max(constraint_violation, (p * traj.states[j] - values).cwiseAbs().maxCoeff());
  }

  std::vector<AlgebraElement> allowed;
  for (Eigen::Index k = 0; k < m; ++k)
    if (std::find(pinned.begin(), pinned.end(), std::size_t(k)) == pinned.end())
      allowed.push_back(basis.element(k));

  const std::string csv_path = prefix + ".ep.csv";
  const std::string report_path = prefix + ".ep.json";
  Outcome out;
  json& r = out.report;
  r["status"] = "ok";
  r["T"] = T;
  r["steps"] = steps;
  r["lagrangian"] = spec.lagrangian;
  r["endpoint_residual"] = (group.back().matrix() - gate.matrix()).norm();
  r["speed_max_drift"] = speed_drift;
  r["constraint_max_violation"] = constraint_violation;
  r["allowed_closure_rank"] = lie_closure_rank(allowed);
  r["algebra_dimension"] = m;
  r["paths"] = {{"trajectory", csv_path}, {"report", report_path}};
  io::write_atomic(csv_path, io::to_csv(header, rows));
  io::write_atomic(report_path, r.dump(2) + "\n");
  return out;
}

/// Geodesic-vector test for X given by basis components.
inline Outcome geovec(const io::ProblemConfig& cfg, const std::vector<double>& x,
                      const Overrides& o = {}) {
  const Metric metric = io::metric_of(cfg);
  const Basis& basis = metric_basis(metric);
  if (static_cast<Eigen::Index>(x.size()) != basis.size())
    throw Error(ErrorKind::config, "X must have one component per basis element");
  const double tol = o.tol.value_or(1e-5);
  const GeodesicVectorCheck g =
      is_geodesic_vector(metric, basis.compose(Eigen::Map<const Vector>(x.data(), basis.size())), tol);
  Outcome out;
  json& r = out.report;
  r["status"] = "ok";
  r["is_geodesic"] = g.is_geodesic;
  r["max_residual"] = g.max_residual;
  r["residuals"] = std::vector<double>(g.residuals.data(), g.residuals.data() + g.residuals.size());
  r["tol"] = tol;
  return out;
}

/// Runs a command, printing its report or the error; returns the exit code.
template <class F>
int guarded(F&& command, std::ostream& out, std::ostream& err) {
  try {
    const Outcome o = command();
    out << o.report.dump(2) << "\n";
    return o.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return invalid_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return failure;
  }
}

}  // namespace zqoc::cli
