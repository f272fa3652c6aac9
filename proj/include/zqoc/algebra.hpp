#pragma once

#include "zqoc/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace zqoc {

inline constexpr cplx I_unit{0.0, 1.0};

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Element of su(n): anti-Hermitian, traceless, n >= 2.
class AlgebraElement {
 public:
  AlgebraElement() = default;

  explicit AlgebraElement(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 2)
      throw Error(ErrorKind::invalid_argument, "su(n) element must be square with n >= 2");
    const double scale = std::max(1.0, max_abs(m_));
    const double herm = max_abs(m_ + m_.adjoint());
    if (herm > tolerances.anti_hermitian * scale)
      throw Error(ErrorKind::not_anti_hermitian,
                  "|A + A^dag|max = " + std::to_string(herm));
    const double tr = std::abs(m_.trace());
    if (tr > tolerances.traceless * scale)
      throw Error(ErrorKind::not_anti_hermitian, "|Tr A| = " + std::to_string(tr));
  }

  /// Anti-Hermitian traceless part of an arbitrary square matrix.
  static AlgebraElement project(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 2)
      throw Error(ErrorKind::invalid_argument, "su(n) element must be square with n >= 2");
    Matrix a = 0.5 * (m - m.adjoint());
    a.diagonal().array() -= a.trace() / static_cast<double>(a.rows());
    AlgebraElement out;
    out.m_ = std::move(a);
    return out;
  }

  /// -i H for Hermitian H. The trace of H is discarded.
  static AlgebraElement from_hamiltonian(const Matrix& h) {
    if (h.rows() != h.cols() || h.rows() < 2)
      throw Error(ErrorKind::invalid_argument, "Hamiltonian must be square with n >= 2");
    const double scale = std::max(1.0, max_abs(h));
    if (max_abs(h - h.adjoint()) > tolerances.anti_hermitian * scale)
      throw Error(ErrorKind::not_anti_hermitian, "Hamiltonian is not Hermitian");
    return project(-I_unit * h);
  }

  static AlgebraElement zero(Eigen::Index n) { return project(Matrix::Zero(n, n)); }

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  /// i A, the Hermitian matrix H with A = -i H.
  Matrix hamiltonian() const { return I_unit * m_; }

  AlgebraElement operator+(const AlgebraElement& o) const { return raw(m_ + o.m_); }
  AlgebraElement operator-(const AlgebraElement& o) const { return raw(m_ - o.m_); }
  AlgebraElement operator-() const { return raw(-m_); }
  AlgebraElement operator*(double s) const { return raw(s * m_); }
  friend AlgebraElement operator*(double s, const AlgebraElement& a) { return a * s; }
  AlgebraElement& operator+=(const AlgebraElement& o) {
    m_ += o.m_;
    return *this;
  }

 private:
  static AlgebraElement raw(Matrix m) {
    AlgebraElement out;
    out.m_ = std::move(m);
    return out;
  }
  Matrix m_;
};

/// Element of SU(n).
class GroupElement {
 public:
  GroupElement() = default;

  explicit GroupElement(Matrix u) : u_(std::move(u)) {
    if (u_.rows() != u_.cols() || u_.rows() < 2)
      throw Error(ErrorKind::invalid_argument, "SU(n) element must be square with n >= 2");
    const Eigen::Index n = u_.rows();
    const double unit = (u_ * u_.adjoint() - Matrix::Identity(n, n)).norm();
    if (unit > tolerances.unitary)
      throw Error(ErrorKind::not_special_unitary, "|U U^dag - I| = " + std::to_string(unit));
    const double det = std::abs(u_.determinant() - 1.0);
    if (det > tolerances.special)
      throw Error(ErrorKind::not_special_unitary, "|det U - 1| = " + std::to_string(det));
  }

  static GroupElement identity(Eigen::Index n) { return trusted(Matrix::Identity(n, n)); }
  /// Skips validation; for matrices special unitary by construction.
  static GroupElement trusted(Matrix u) {
    GroupElement g;
    g.u_ = std::move(u);
    return g;
  }

  const Matrix& matrix() const { return u_; }
  Eigen::Index dim() const { return u_.rows(); }
  GroupElement adjoint() const { return trusted(u_.adjoint()); }
  GroupElement operator*(const GroupElement& o) const { return trusted(u_ * o.u_); }

 private:
  Matrix u_;
};

inline AlgebraElement commutator(const AlgebraElement& a, const AlgebraElement& b) {
  return AlgebraElement::project(a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

/// U A U^dag.
inline AlgebraElement adjoint_action(const GroupElement& u, const AlgebraElement& a) {
  return AlgebraElement::project(u.matrix() * a.matrix() * u.matrix().adjoint());
}

inline GroupElement expm(const AlgebraElement& a) {
  Matrix h = I_unit * a.matrix();
  h = 0.5 * (h + h.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::numerical, "expm: Hermitian eigensolver failed, |A|max = " +
                                          std::to_string(max_abs(a.matrix())));
  const Eigen::VectorXcd phase = (-I_unit * es.eigenvalues().cast<cplx>()).array().exp();
  return GroupElement::trusted(es.eigenvectors() * phase.asDiagonal() *
                               es.eigenvectors().adjoint());
}

struct SuLog {
  AlgebraElement value;
  bool near_branch_cut = false;  // an eigenvalue sits within tolerance of -1
};

/// Principal logarithm with eigenphases repaired so the result is traceless.
inline SuLog logm_su(const GroupElement& u) {
  const Eigen::Index n = u.dim();
  Eigen::ComplexSchur<Matrix> schur(u.matrix());
  if (schur.info() != Eigen::Success)
    throw Error(ErrorKind::numerical, "logm_su: Schur decomposition did not converge");
  const Matrix& z = schur.matrixU();
  const Matrix& t = schur.matrixT();
  constexpr double pi = std::numbers::pi;

  Vector theta(n);
  bool near_cut = false;
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx lam = t(k, k);
    if (std::abs(lam + 1.0) <= tolerances.branch_cut) near_cut = true;
    double th = std::arg(lam);
    if (th <= -pi) th += 2 * pi;
    theta(k) = th;
  }
  const long shift = std::lround(theta.sum() / (2 * pi));
  if (shift != 0) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return theta(a) < theta(b); });
    if (shift > 0) {
      for (long j = 0; j < shift; ++j) theta(order[static_cast<std::size_t>(n - 1 - j)]) -= 2 * pi;
    } else {
      for (long j = 0; j < -shift; ++j) theta(order[static_cast<std::size_t>(j)]) += 2 * pi;
    }
  }
  const Eigen::VectorXcd d = I_unit * theta.cast<cplx>();
  return {AlgebraElement::project(z * d.asDiagonal() * z.adjoint()), near_cut};
}

/// Removes the global phase of a unitary, arg det taken in [-pi, pi).
inline GroupElement project_su(const Matrix& u) {
  if (u.rows() != u.cols() || u.rows() < 2)
    throw Error(ErrorKind::invalid_argument, "project_su: square matrix with n >= 2 required");
  const Eigen::Index n = u.rows();
  const double unit = (u * u.adjoint() - Matrix::Identity(n, n)).norm();
  if (unit > tolerances.unitary)
    throw Error(ErrorKind::not_special_unitary, "project_su: matrix is not unitary");
  constexpr double pi = std::numbers::pi;
  double phi = std::arg(u.determinant());
  if (phi >= pi) phi -= 2 * pi;
  const cplx fix = std::exp(-I_unit * (phi / static_cast<double>(n)));
  return GroupElement::trusted(fix * u);
}

// ---------------------------------------------------------------------------
// generators

enum class GeneratorKind { gell_mann, tensor_pauli };

inline Matrix pauli(char c) {
  Matrix s = Matrix::Zero(2, 2);
  switch (c) {
    case '0': s << 1, 0, 0, 1; break;
    case 'x': s << 0, 1, 1, 0; break;
    case 'y': s << 0, -I_unit, I_unit, 0; break;
    case 'z': s << 1, 0, 0, -1; break;
    default: throw Error(ErrorKind::invalid_argument, std::string("unknown Pauli label ") + c);
  }
  return s;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Hermitian generators of su(n) with labels.
struct GeneratorSet {
  std::vector<Matrix> hermitian;
  std::vector<std::string> labels;
};

inline int pauli_qubits(Eigen::Index n) {
  int q = 0;
  Eigen::Index m = 1;
  while (m < n) {
    m *= 2;
    ++q;
  }
  if (m != n)
    throw Error(ErrorKind::invalid_argument, "tensor-Pauli generators need n = 2^k");
  return q;
}

inline GeneratorSet generators(Eigen::Index n, GeneratorKind kind) {
  if (n < 2) throw Error(ErrorKind::invalid_argument, "generators: n >= 2 required");
  GeneratorSet g;
  if (kind == GeneratorKind::tensor_pauli) {
    const int q = pauli_qubits(n);
    const char* names = "0xyz";
    long total = 1;
    for (int k = 0; k < q; ++k) total *= 4;
    for (long idx = 1; idx < total; ++idx) {
      std::string label(static_cast<std::size_t>(q), '0');
      long rest = idx;
      for (int k = q - 1; k >= 0; --k) {
        label[static_cast<std::size_t>(k)] = names[rest % 4];
        rest /= 4;
      }
      Matrix m = pauli(label[0]);
      for (int k = 1; k < q; ++k) m = kron(m, pauli(label[static_cast<std::size_t>(k)]));
      g.hermitian.push_back(std::move(m));
      g.labels.push_back("s" + label);
    }
    return g;
  }
  if (n == 2) {
    for (char c : {'x', 'y', 'z'}) {
      g.hermitian.push_back(pauli(c));
      g.labels.push_back(std::string("s") + c);
    }
    return g;
  }
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) {
      Matrix m = Matrix::Zero(n, n);
      m(j, k) = 1.0;
      m(k, j) = 1.0;
      g.hermitian.push_back(std::move(m));
      g.labels.push_back("gm_s" + std::to_string(j) + "_" + std::to_string(k));
    }
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) {
      Matrix m = Matrix::Zero(n, n);
      m(j, k) = -I_unit;
      m(k, j) = I_unit;
      g.hermitian.push_back(std::move(m));
      g.labels.push_back("gm_a" + std::to_string(j) + "_" + std::to_string(k));
    }
  for (Eigen::Index l = 1; l < n; ++l) {
    Matrix m = Matrix::Zero(n, n);
    const double c = std::sqrt(2.0 / static_cast<double>(l * (l + 1)));
    for (Eigen::Index j = 0; j < l; ++j) m(j, j) = c;
    m(l, l) = -c * static_cast<double>(l);
    g.hermitian.push_back(std::move(m));
    g.labels.push_back("gm_d" + std::to_string(l));
  }
  return g;
}

// ---------------------------------------------------------------------------
// constraint norms

struct KillingMultiple {
  double kappa = 1.0;
};

/// Positive-definite Gram matrix over the trace-orthonormal generators.
struct GramMetric {
  RealMatrix gram;
  GeneratorKind reference = GeneratorKind::gell_mann;
};

struct SchattenP {
  double p = 2.0;
  double kappa = 1.0;
};

class ConstraintNorm {
 public:
  using Variant = std::variant<KillingMultiple, GramMetric, SchattenP>;

  ConstraintNorm() : v_(KillingMultiple{}) {}

  ConstraintNorm(KillingMultiple k) : v_(k) {
    if (!(k.kappa > 0) || !std::isfinite(k.kappa))
      throw Error(ErrorKind::invalid_argument, "Killing multiple needs kappa > 0");
  }

  ConstraintNorm(GramMetric g) : v_(g) {
    const RealMatrix& G = g.gram;
    if (G.rows() != G.cols() || G.rows() < 3)
      throw Error(ErrorKind::invalid_argument, "Gram matrix must be square of size n^2 - 1");
    const auto n = static_cast<Eigen::Index>(std::lround(std::sqrt(double(G.rows() + 1))));
    if (n * n != G.rows() + 1)
      throw Error(ErrorKind::invalid_argument, "Gram matrix size is not n^2 - 1");
    if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, G.cwiseAbs().maxCoeff()))
      throw Error(ErrorKind::invalid_argument, "Gram matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(G, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0)
      throw Error(ErrorKind::invalid_argument, "Gram matrix is not positive definite");
    auto ref = generators(n, g.reference);
    auto basis = std::make_shared<std::vector<Matrix>>();
    for (auto& h : ref.hermitian) basis->push_back(h / std::sqrt(std::real((h * h).trace())));
    ref_ = std::move(basis);
    n_ = n;
  }

  ConstraintNorm(SchattenP s) : v_(s) {
    if (!(s.kappa > 0) || !std::isfinite(s.kappa))
      throw Error(ErrorKind::invalid_argument, "Schatten norm needs kappa > 0");
    if (!(s.p >= 1.0))
      throw Error(ErrorKind::invalid_argument, "Schatten norm needs p >= 1");
  }

  const Variant& variant() const { return v_; }
  bool is_inner_product() const { return !std::holds_alternative<SchattenP>(v_); }

  /// Components of A over the trace-orthonormal reference generators (Gram only).
  Vector gram_components(const AlgebraElement& a) const {
    if (!ref_) throw Error(ErrorKind::invalid_variant, "gram_components needs a Gram norm");
    if (a.dim() != n_)
      throw Error(ErrorKind::invalid_argument, "dimension does not match the Gram matrix");
    const Matrix h = a.hamiltonian();
    Vector c(static_cast<Eigen::Index>(ref_->size()));
    for (std::size_t k = 0; k < ref_->size(); ++k)
      c(static_cast<Eigen::Index>(k)) = std::real(((*ref_)[k].cwiseProduct(h.transpose())).sum());
    return c;
  }

 private:
  Variant v_;
  std::shared_ptr<const std::vector<Matrix>> ref_;
  Eigen::Index n_ = 0;
};

/// Re Tr(A B) without forming the product.
inline double re_trace_product(const Matrix& a, const Matrix& b) {
  return std::real(a.cwiseProduct(b.transpose()).sum());
}

inline double inner(const ConstraintNorm& h, const AlgebraElement& a, const AlgebraElement& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::invalid_argument, "inner: dimension mismatch");
  if (auto k = std::get_if<KillingMultiple>(&h.variant()))
    return -k->kappa * re_trace_product(a.matrix(), b.matrix());
  if (auto g = std::get_if<GramMetric>(&h.variant()))
    return h.gram_components(a).dot(g->gram * h.gram_components(b));
  throw Error(ErrorKind::invalid_variant, "inner: Schatten norms have no inner product");
}

inline double schatten(const ConstraintNorm& h, const AlgebraElement& a) {
  auto s = std::get_if<SchattenP>(&h.variant());
  if (!s) throw Error(ErrorKind::invalid_variant, "schatten: norm is not a Schatten norm");
  Matrix herm = a.hamiltonian();
  herm = 0.5 * (herm + herm.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::numerical, "schatten: eigensolver failed");
  const Eigen::ArrayXd e = es.eigenvalues().array().abs();
  const double top = e.maxCoeff();
  if (top == 0.0) return 0.0;
  if (std::isinf(s->p)) return s->kappa * top;
  return s->kappa * top * std::pow((e / top).pow(s->p).sum(), 1.0 / s->p);
}

/// Norm induced by h: sqrt(h(A,A)) or the Schatten norm.
inline double norm(const ConstraintNorm& h, const AlgebraElement& a) {
  if (h.is_inner_product()) return std::sqrt(std::max(0.0, inner(h, a, a)));
  return schatten(h, a);
}

// ---------------------------------------------------------------------------
// bases

/// h-orthogonal basis of su(n) with labels.
class Basis {
 public:
  Basis() = default;

  Basis(std::vector<AlgebraElement> elements, std::vector<std::string> labels, ConstraintNorm h)
      : elems_(std::move(elements)), labels_(std::move(labels)), h_(std::move(h)) {
    if (!h_.is_inner_product())
      throw Error(ErrorKind::invalid_variant, "Basis requires an inner-product norm");
    if (elems_.empty()) throw Error(ErrorKind::invalid_argument, "Basis is empty");
    if (labels_.size() != elems_.size())
      throw Error(ErrorKind::invalid_argument, "Basis labels do not match elements");
    const Eigen::Index n = elems_.front().dim();
    if (static_cast<Eigen::Index>(elems_.size()) != n * n - 1)
      throw Error(ErrorKind::invalid_argument, "Basis must have n^2 - 1 elements");
    const auto m = static_cast<Eigen::Index>(elems_.size());
    gram_ = RealMatrix(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = j; k < m; ++k)
        gram_(j, k) = gram_(k, j) = inner(h_, elems_[std::size_t(j)], elems_[std::size_t(k)]);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!(gram_(j, j) > 0)) throw Error(ErrorKind::non_orthogonal_basis, "zero basis element");
      for (Eigen::Index k = 0; k < j; ++k)
        if (std::abs(gram_(j, k)) >
            tolerances.orthogonality * std::sqrt(gram_(j, j) * gram_(k, k)))
          throw Error(ErrorKind::non_orthogonal_basis,
                      "elements " + labels_[std::size_t(j)] + " and " + labels_[std::size_t(k)] +
                          " are not h-orthogonal");
    }
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(elems_.size()); }
  Eigen::Index dim() const { return elems_.empty() ? 0 : elems_.front().dim(); }
  const AlgebraElement& element(Eigen::Index k) const { return elems_[std::size_t(k)]; }
  const std::vector<AlgebraElement>& elements() const { return elems_; }
  const std::string& label(Eigen::Index k) const { return labels_[std::size_t(k)]; }
  const std::vector<std::string>& labels() const { return labels_; }
  const ConstraintNorm& norm() const { return h_; }
  double self_inner(Eigen::Index k) const { return gram_(k, k); }
  /// h(B_j, B_k); diagonal up to the orthogonality tolerance.
  const RealMatrix& gram() const { return gram_; }

  Vector coordinates(const AlgebraElement& a) const {
    if (a.dim() != dim()) throw Error(ErrorKind::invalid_argument, "coordinates: dimension mismatch");
    Vector c(size());
    for (Eigen::Index k = 0; k < size(); ++k) c(k) = inner(h_, element(k), a) / gram_(k, k);
    return c;
  }

  AlgebraElement compose(const Vector& c) const {
    if (c.size() != size()) throw Error(ErrorKind::invalid_argument, "compose: wrong length");
    Matrix m = Matrix::Zero(dim(), dim());
    for (Eigen::Index k = 0; k < size(); ++k) m += c(k) * element(k).matrix();
    return AlgebraElement::project(m);
  }

 private:
  std::vector<AlgebraElement> elems_;
  std::vector<std::string> labels_;
  ConstraintNorm h_;
  RealMatrix gram_;
};

/// i * generators, orthogonal under any Killing multiple.
inline Basis generator_basis(Eigen::Index n, GeneratorKind kind,
                             const ConstraintNorm& h = KillingMultiple{1.0}) {
  auto g = generators(n, kind);
  std::vector<AlgebraElement> e;
  for (auto& m : g.hermitian) e.push_back(AlgebraElement::project(I_unit * m));
  return Basis(std::move(e), std::move(g.labels), h);
}

/// Unit basis under h, by Gram-Schmidt over the generators in order.
inline Basis orthonormal_basis(Eigen::Index n, const ConstraintNorm& h,
                               GeneratorKind kind = GeneratorKind::gell_mann) {
  if (!h.is_inner_product())
    throw Error(ErrorKind::invalid_variant, "orthonormal_basis needs an inner-product norm");
  auto g = generators(n, kind);
  std::vector<AlgebraElement> e;
  for (auto& m : g.hermitian) {
    AlgebraElement v = AlgebraElement::project(I_unit * m);
    for (const auto& u : e) v = v - inner(h, u, v) * u;
    const double len = std::sqrt(inner(h, v, v));
    if (!(len > 1e-12)) throw Error(ErrorKind::numerical, "orthonormal_basis: degenerate norm");
    e.push_back(v * (1.0 / len));
  }
  return Basis(std::move(e), std::move(g.labels), h);
}

/// C^a_{bd} with [B_b, B_d] = C^a_{bd} B_a.
class StructureConstants {
 public:
  StructureConstants() = default;
  explicit StructureConstants(Eigen::Index m) : m_(m), data_(std::size_t(m * m * m), 0.0) {}
  Eigen::Index size() const { return m_; }
  double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index d) const {
    return data_[std::size_t((a * m_ + b) * m_ + d)];
  }
  double& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index d) {
    return data_[std::size_t((a * m_ + b) * m_ + d)];
  }

 private:
  Eigen::Index m_ = 0;
  std::vector<double> data_;
};

inline StructureConstants structure_constants(const Basis& basis) {
  const Eigen::Index m = basis.size();
  StructureConstants c(m);
  for (Eigen::Index b = 0; b < m; ++b)
    for (Eigen::Index d = b + 1; d < m; ++d) {
      const Vector k = basis.coordinates(commutator(basis.element(b), basis.element(d)));
      for (Eigen::Index a = 0; a < m; ++a) {
        c(a, b, d) = k(a);
        c(a, d, b) = -k(a);
      }
    }
  return c;
}

/// Largest violation of the Jacobi identity.
inline double jacobi_residual(const StructureConstants& c) {
  const Eigen::Index m = c.size();
  double worst = 0.0;
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index d = 0; d < m; ++d)
        for (Eigen::Index f = 0; f < m; ++f) {
          double s = 0.0;
          for (Eigen::Index e = 0; e < m; ++e)
            s += c(e, a, b) * c(f, e, d) + c(e, b, d) * c(f, e, a) + c(e, d, a) * c(f, e, b);
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

/// Dimension of the Lie algebra generated by the given elements.
inline int lie_closure_rank(const std::vector<AlgebraElement>& gens, double tol = 1e-10) {
  std::vector<Vector> span;
  std::vector<AlgebraElement> members;
  auto add = [&](const AlgebraElement& a) {
    const Matrix& m = a.matrix();
    Vector v(2 * m.size());
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      v(2 * k) = m.data()[k].real();
      v(2 * k + 1) = m.data()[k].imag();
    }
    const double scale = std::max(1.0, v.norm());
    for (const auto& u : span) v -= u.dot(v) * u;
    if (v.norm() <= tol * scale) return false;
    span.push_back(v.normalized());
    members.push_back(a);
    return true;
  };
  for (const auto& g : gens) add(g);
  std::size_t done = 0;
  while (done < members.size()) {
    const std::size_t stop = members.size();
    for (std::size_t i = done; i < stop; ++i)
      for (std::size_t j = 0; j < i; ++j) add(commutator(members[j], members[i]));
    done = stop;
  }
  return static_cast<int>(span.size());
}

}  // namespace zqoc
