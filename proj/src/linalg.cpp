#include "dmpc/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace dmpc {

bool is_symmetric(const Mat& m, double tol) {
  if (m.rows() != m.cols()) return false;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double spectral_radius(const Mat& m) {
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

Mat sym_sqrt(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Mat sym_inv_sqrt(const Mat& m, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  if (es.eigenvalues().minCoeff() <= tol)
    throw Error("sym_inv_sqrt: matrix is not positive definite");
  Vec d = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Mat expm(const Mat& m) { return m.exp(); }

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace dmpc
