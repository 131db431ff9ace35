#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dmpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Base class for all recoverable library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

bool is_symmetric(const Mat& m, double tol = 1e-12);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& m);

double spectral_radius(const Mat& m);

/// Symmetric positive semidefinite square root; eigenvalues below zero are
/// clamped (inputs are expected to be PSD up to roundoff).
Mat sym_sqrt(const Mat& m);

/// Inverse of the symmetric square root. Requires strictly positive spectrum.
Mat sym_inv_sqrt(const Mat& m, double tol = 1e-12);

/// Dense matrix exponential.
Mat expm(const Mat& m);

/// Symmetrize in place: (m + m^T)/2.
Mat symmetrize(const Mat& m);

}  // namespace dmpc
