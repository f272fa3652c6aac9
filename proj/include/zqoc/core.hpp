#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace zqoc {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
  invalid_argument,
  invalid_variant,
  not_anti_hermitian,
  not_special_unitary,
  strong_wind,
  no_root,
  numerical,
  domain,
  singular_system,
  inconsistent_state,
  non_orthogonal_basis,
  not_commuting,
  out_of_range,
  config,
  io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::invalid_variant: return "invalid_variant";
    case ErrorKind::not_anti_hermitian: return "not_anti_hermitian";
    case ErrorKind::not_special_unitary: return "not_special_unitary";
    case ErrorKind::strong_wind: return "strong_wind";
    case ErrorKind::no_root: return "no_root";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::domain: return "domain";
    case ErrorKind::singular_system: return "singular_system";
    case ErrorKind::inconsistent_state: return "inconsistent_state";
    case ErrorKind::non_orthogonal_basis: return "non_orthogonal_basis";
    case ErrorKind::not_commuting: return "not_commuting";
    case ErrorKind::out_of_range: return "out_of_range";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Numerical thresholds shared across modules.
struct Tolerances {
  double anti_hermitian = 1e-12;  // per entry, scaled by max(1, |A|max)
  double traceless = 1e-10;
  double unitary = 1e-10;         // Frobenius norm of U U^dag - I
  double special = 1e-8;          // |det U - 1|
  double branch_cut = 1e-8;       // eigenvalue distance from -1
  double weak_wind = 1e-6;        // required margin below unit drift norm
  double orthogonality = 1e-10;
  double commuting = 1e-10;
  double fd_step = 1e-5;          // relative step for second differences
  double momentum_fd_step = 1e-6; // relative step for mass matrices
  double root_merge = 1e-6;
  double bracket_width = 1e-9;
  double imaginary_residue = 1e-8;
  double consistency = 1e-8;
  double unit_speed = 1e-9;
  double endpoint = 1e-8;
};

inline constexpr Tolerances tolerances{};

}  // namespace zqoc
