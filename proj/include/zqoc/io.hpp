#pragma once

#include "zqoc/algebra.hpp"
#include "zqoc/brachistochrone.hpp"
#include "zqoc/navigation.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace zqoc::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// text helpers

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw Error(ErrorKind::config, "not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a temporary sibling and renames it into place.
inline void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::io, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot rename into " + path);
  }
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string to_csv(const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) out += (k ? "," : "") + r[k];
    out += '\n';
  }
  return out;
}

inline Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorKind::config, "CSV row has " + std::to_string(cells.size()) +
                                         " cells, header has " + std::to_string(t.header.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    t.rows.push_back(std::move(row));
  }
  if (first) throw Error(ErrorKind::config, "CSV header row is missing");
  return t;
}

inline std::string schedule_csv(const ControlSchedule& s) {
  std::vector<std::string> header{"t"};
  for (const auto& l : s.labels) header.push_back("f_" + l);
  header.push_back("constraint_check");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < s.times.size(); ++j) {
    std::vector<std::string> r{format_double(s.times[j])};
    for (Eigen::Index k = 0; k < s.fields[j].size(); ++k) r.push_back(format_double(s.fields[j](k)));
    r.push_back(format_double(s.constraint_values[j]));
    rows.push_back(std::move(r));
  }
  return to_csv(header, rows);
}

// ---------------------------------------------------------------------------
// matrices

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index n, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw Error(ErrorKind::config, what + ": expected " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[std::size_t(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw Error(ErrorKind::config, what + ": row " + std::to_string(r) + " has wrong length");
    for (Eigen::Index c = 0; c < n; ++c) {
      const json& e = row[std::size_t(c)];
      if (e.is_number()) {
        m(r, c) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        throw Error(ErrorKind::config, what + ": entries must be [re, im] pairs");
      }
    }
  }
  return m;
}

inline json real_matrix_to_json(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline RealMatrix real_matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::config, what + ": expected rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  RealMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[std::size_t(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw Error(ErrorKind::config, what + ": matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) {
      if (!row[std::size_t(c)].is_number()) throw Error(ErrorKind::config, what + ": not a number");
      m(r, c) = row[std::size_t(c)].get<double>();
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// problem config

struct ConstraintSpec {
  std::string type = "killing";  // killing | gram | schatten
  double kappa = 1.0;
  double p = 2.0;
  RealMatrix gram;
  bool operator==(const ConstraintSpec& o) const {
    return type == o.type && kappa == o.kappa && p == o.p && gram.rows() == o.gram.rows() &&
           (gram.size() == 0 || gram == o.gram);
  }
};

struct SolverSpec {
  double t_max = 50.0;
  double scan_step = 0.01;
  double tol = 1e-10;
  int prop_steps = 0;  // 0 selects max(1e4, ceil(T / 1e-3))
  int samples = 2001;
  double tol_verify = 1e-6;
  bool all_roots = false;
  bool operator==(const SolverSpec&) const = default;
};

struct ModelSpec {
  std::string type;  // single-spin | xxx
  double bx = 0.25;
  double by = 0.25;
  double d = 1.0 / std::numbers::sqrt2;
  double j = 0.1;
  bool operator==(const ModelSpec&) const = default;
};

struct EPConstraintSpec {
  std::string label;
  std::optional<double> value;
  double multiplier = 0.0;
  bool operator==(const EPConstraintSpec&) const = default;
};

struct EPSpec {
  std::string lagrangian = "randers";  // randers | riemannian
  std::optional<std::vector<double>> xi0;
  std::optional<double> T;
  int steps = 2000;
  std::vector<EPConstraintSpec> constraints;
  bool operator==(const EPSpec&) const = default;
};

struct ProblemConfig {
  int n = 2;
  Matrix drift;  // Hermitian H0
  Matrix gate;
  ConstraintSpec constraint;
  SolverSpec solver;
  GeneratorKind basis = GeneratorKind::gell_mann;
  std::optional<ModelSpec> model;
  std::optional<EPSpec> ep;

  bool operator==(const ProblemConfig& o) const {
    return n == o.n && drift == o.drift && gate == o.gate && constraint == o.constraint &&
           solver == o.solver && basis == o.basis && model == o.model && ep == o.ep;
  }
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::config, std::string("field '") + key + "' has the wrong type");
  }
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(ErrorKind::config, "unknown field '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

inline ModelSpec parse_model(const json& j) {
  detail::check_keys(j, {"type", "bx", "by", "d", "J"}, "model");
  ModelSpec m;
  m.type = detail::get_or<std::string>(j, "type", "");
  if (m.type != "single-spin" && m.type != "xxx")
    throw Error(ErrorKind::config, "model.type must be single-spin or xxx");
  m.bx = detail::get_or(j, "bx", m.bx);
  m.by = detail::get_or(j, "by", m.by);
  m.d = detail::get_or(j, "d", m.d);
  m.j = detail::get_or(j, "J", m.j);
  if (!(m.d > 0)) throw Error(ErrorKind::config, "model.d must be positive");
  return m;
}

inline Matrix model_hamiltonian(const ModelSpec& m) {
  if (m.type == "single-spin") return zqoc::model_hamiltonian(SingleSpin{m.bx, m.by, m.d});
  return zqoc::model_hamiltonian(XXXChain{m.j});
}

inline ProblemConfig parse_config(const json& j) {
  detail::check_keys(j, {"n", "drift", "gate", "constraint", "solver", "basis", "model", "ep"},
                     "config");
  ProblemConfig c;
  if (j.contains("model")) c.model = parse_model(j.at("model"));

  if (j.contains("n")) {
    c.n = detail::get_or(j, "n", 0);
  } else if (c.model) {
    c.n = c.model->type == "xxx" ? 4 : 2;
  } else {
    throw Error(ErrorKind::config, "missing field 'n'");
  }
  if (c.n < 2) throw Error(ErrorKind::config, "n must be at least 2");
  if (c.model && c.n != (c.model->type == "xxx" ? 4 : 2))
    throw Error(ErrorKind::config, "n does not match the model");

  const std::string basis = detail::get_or<std::string>(j, "basis", "gellmann");
  if (basis == "gellmann")
    c.basis = GeneratorKind::gell_mann;
  else if (basis == "tensor-pauli")
    c.basis = GeneratorKind::tensor_pauli;
  else
    throw Error(ErrorKind::config, "basis must be gellmann or tensor-pauli");
  if (c.basis == GeneratorKind::tensor_pauli && (c.n & (c.n - 1)) != 0)
    throw Error(ErrorKind::config, "tensor-pauli basis needs n = 2^k");

  if (j.contains("drift"))
    c.drift = matrix_from_json(j.at("drift"), c.n, "drift");
  else if (c.model)
    c.drift = model_hamiltonian(*c.model);
  else
    throw Error(ErrorKind::config, "missing field 'drift'");
  if (max_abs(c.drift - c.drift.adjoint()) > 1e-10)
    throw Error(ErrorKind::config, "drift is not Hermitian");

  if (j.contains("gate"))
    c.gate = matrix_from_json(j.at("gate"), c.n, "gate");
  else if (c.model)
    c.gate = c.model->type == "xxx" ? swap_gate().matrix() : single_spin_gate().matrix();
  else
    throw Error(ErrorKind::config, "missing field 'gate'");
  if ((c.gate * c.gate.adjoint() - Matrix::Identity(c.n, c.n)).norm() > 1e-10)
    throw Error(ErrorKind::config, "gate is not unitary");

  if (j.contains("constraint")) {
    const json& k = j.at("constraint");
    detail::check_keys(k, {"type", "kappa", "p", "gram"}, "constraint");
    c.constraint.type = detail::get_or<std::string>(k, "type", "killing");
    c.constraint.kappa = detail::get_or(k, "kappa", 1.0);
    if (k.contains("p")) {
      const json& p = k.at("p");
      if (p.is_string() && (p.get<std::string>() == "inf" || p.get<std::string>() == "infinity"))
        c.constraint.p = std::numeric_limits<double>::infinity();
      else
        c.constraint.p = detail::get_or(k, "p", 2.0);
    }
    if (k.contains("gram")) c.constraint.gram = real_matrix_from_json(k.at("gram"), "constraint.gram");
  } else if (c.model && c.model->type == "single-spin") {
    c.constraint.kappa = model_kappa(SingleSpin{c.model->bx, c.model->by, c.model->d});
  }
  const auto& ct = c.constraint.type;
  if (ct != "killing" && ct != "gram" && ct != "schatten")
    throw Error(ErrorKind::config, "constraint.type must be killing, gram or schatten");
  if (ct == "gram" && c.constraint.gram.rows() != c.n * c.n - 1)
    throw Error(ErrorKind::config, "constraint.gram must be (n^2-1) x (n^2-1)");

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::check_keys(s, {"t_max", "scan_step", "tol", "prop_steps", "samples", "tol_verify",
                           "all_roots"},
                       "solver");
    c.solver.t_max = detail::get_or(s, "t_max", c.solver.t_max);
    c.solver.scan_step = detail::get_or(s, "scan_step", c.solver.scan_step);
    c.solver.tol = detail::get_or(s, "tol", c.solver.tol);
    c.solver.prop_steps = detail::get_or(s, "prop_steps", c.solver.prop_steps);
    c.solver.samples = detail::get_or(s, "samples", c.solver.samples);
    c.solver.tol_verify = detail::get_or(s, "tol_verify", c.solver.tol_verify);
    c.solver.all_roots = detail::get_or(s, "all_roots", c.solver.all_roots);
  }
  if (!(c.solver.t_max > c.solver.scan_step && c.solver.scan_step > 0 && c.solver.tol > 0))
    throw Error(ErrorKind::config, "solver needs t_max > scan_step > 0 and tol > 0");
  if (c.solver.samples < 2 || c.solver.prop_steps < 0 || !(c.solver.tol_verify > 0))
    throw Error(ErrorKind::config, "solver needs samples >= 2, prop_steps >= 0, tol_verify > 0");

  if (j.contains("ep")) {
    const json& e = j.at("ep");
    detail::check_keys(e, {"lagrangian", "xi0", "T", "steps", "constraints"}, "ep");
    EPSpec ep;
    ep.lagrangian = detail::get_or<std::string>(e, "lagrangian", ep.lagrangian);
    if (ep.lagrangian != "randers" && ep.lagrangian != "riemannian")
      throw Error(ErrorKind::config, "ep.lagrangian must be randers or riemannian");
    if (e.contains("xi0")) ep.xi0 = detail::get_or<std::vector<double>>(e, "xi0", {});
    if (e.contains("T")) ep.T = detail::get_or(e, "T", 0.0);
    ep.steps = detail::get_or(e, "steps", ep.steps);
    if (ep.steps < 1) throw Error(ErrorKind::config, "ep.steps must be positive");
    if (e.contains("constraints")) {
      const json& list = e.at("constraints");
      if (!list.is_array()) throw Error(ErrorKind::config, "ep.constraints must be a list");
      for (const json& item : list) {
        detail::check_keys(item, {"label", "value", "multiplier"}, "ep.constraints");
        EPConstraintSpec k;
        k.label = detail::get_or<std::string>(item, "label", "");
        if (item.contains("value")) k.value = detail::get_or(item, "value", 0.0);
        k.multiplier = detail::get_or(item, "multiplier", 0.0);
        ep.constraints.push_back(k);
      }
    }
    c.ep = ep;
  }
  return c;
}

inline ProblemConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ProblemConfig load_config(const std::string& path) { return parse_config_text(read_file(path)); }

inline json to_json(const ProblemConfig& c) {
  json j;
  j["n"] = c.n;
  j["basis"] = c.basis == GeneratorKind::gell_mann ? "gellmann" : "tensor-pauli";
  j["drift"] = matrix_to_json(c.drift);
  j["gate"] = matrix_to_json(c.gate);
  json k;
  k["type"] = c.constraint.type;
  k["kappa"] = c.constraint.kappa;
  if (std::isinf(c.constraint.p))
    k["p"] = "inf";
  else
    k["p"] = c.constraint.p;
  if (c.constraint.gram.size() > 0) k["gram"] = real_matrix_to_json(c.constraint.gram);
  j["constraint"] = k;
  j["solver"] = {{"t_max", c.solver.t_max},         {"scan_step", c.solver.scan_step},
                 {"tol", c.solver.tol},             {"prop_steps", c.solver.prop_steps},
                 {"samples", c.solver.samples},     {"tol_verify", c.solver.tol_verify},
                 {"all_roots", c.solver.all_roots}};
  if (c.model) {
    const auto& m = *c.model;
    j["model"] = {{"type", m.type}, {"bx", m.bx}, {"by", m.by}, {"d", m.d}, {"J", m.j}};
  }
  if (c.ep) {
    json e;
    e["lagrangian"] = c.ep->lagrangian;
    if (c.ep->xi0) e["xi0"] = *c.ep->xi0;
    if (c.ep->T) e["T"] = *c.ep->T;
    e["steps"] = c.ep->steps;
    json list = json::array();
    for (const auto& k2 : c.ep->constraints) {
      json item{{"label", k2.label}, {"multiplier", k2.multiplier}};
      if (k2.value) item["value"] = *k2.value;
      list.push_back(item);
    }
    e["constraints"] = list;
    j["ep"] = e;
  }
  return j;
}

// ---------------------------------------------------------------------------
// objects built from a config

inline AlgebraElement drift_of(const ProblemConfig& c) { return AlgebraElement::from_hamiltonian(c.drift); }

inline GroupElement gate_of(const ProblemConfig& c) { return project_su(c.gate); }

inline ConstraintNorm constraint_of(const ProblemConfig& c) {
  const auto& k = c.constraint;
  if (k.type == "killing") return KillingMultiple{k.kappa};
  if (k.type == "gram") return GramMetric{k.gram, c.basis};
  return SchattenP{k.p, k.kappa};
}

/// Field basis: raw generators when they are h-orthogonal, else Gram-Schmidt under h.
inline Basis basis_of(const ProblemConfig& c) {
  const ConstraintNorm h = constraint_of(c);
  if (c.constraint.type == "killing") return generator_basis(c.n, c.basis, h);
  if (c.constraint.type == "gram") return orthonormal_basis(c.n, h, c.basis);
  return generator_basis(c.n, c.basis);
}

inline ScanSettings scan_of(const ProblemConfig& c) {
  return ScanSettings{c.solver.t_max, c.solver.scan_step, c.solver.tol, c.solver.all_roots};
}

inline Metric metric_of(const ProblemConfig& c) {
  NavigationData nav(constraint_of(c), drift_of(c));
  const Basis basis = basis_of(c);
  if (nav.constraint().is_inner_product()) return build_randers(nav, basis);
  return NavigationMetric{nav, basis};
}

}  // namespace zqoc::io
