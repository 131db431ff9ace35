#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dmpc/linalg.hpp"

namespace dmpc::conic {

struct AsymmetricExpression : Error {
  using Error::Error;
};
struct UnknownVariable : Error {
  using Error::Error;
};
struct EmptyProgram : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

/// Affine scalar expression: constant + sum of coefficient * variable.
/// Terms are kept sorted by variable index with duplicates merged.
class LinExpr {
 public:
  LinExpr() = default;
  explicit LinExpr(double constant) : constant_(constant) {}
  static LinExpr variable(int index, double coef = 1.0);

  double constant() const { return constant_; }
  const std::vector<std::pair<int, double>>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }
  int max_var() const { return terms_.empty() ? -1 : terms_.back().first; }

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator+=(double v) {
    constant_ += v;
    return *this;
  }
  LinExpr& operator-=(double v) {
    constant_ -= v;
    return *this;
  }
  LinExpr& operator*=(double v);

  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator+(LinExpr a, double b) { return a += b; }
  friend LinExpr operator-(LinExpr a, double b) { return a -= b; }
  friend LinExpr operator*(LinExpr a, double b) { return a *= b; }
  friend LinExpr operator*(double a, LinExpr b) { return b *= a; }
  friend LinExpr operator-(LinExpr a) { return a *= -1.0; }

  bool same_as(const LinExpr& o, double tol = 0.0) const;

 private:
  std::vector<std::pair<int, double>> terms_;
  double constant_ = 0.0;
};

/// Dense matrix of affine expressions, used to stage PSD blocks.
class MatExpr {
 public:
  MatExpr() = default;
  MatExpr(int rows, int cols) : rows_(rows), cols_(cols), e_(rows * cols) {}
  explicit MatExpr(const Mat& constant);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  LinExpr& at(int i, int j) { return e_[i * cols_ + j]; }
  const LinExpr& at(int i, int j) const { return e_[i * cols_ + j]; }

  void set_block(int r0, int c0, const Mat& constant);
  void set_block(int r0, int c0, const MatExpr& m);
  void add_block(int r0, int c0, const MatExpr& m, double scale = 1.0);

  MatExpr transpose() const;
  bool is_symmetric(double tol = 1e-9) const;

  friend MatExpr operator*(const Mat& a, const MatExpr& b);
  friend MatExpr operator*(const MatExpr& a, const Mat& b);
  friend MatExpr operator+(const MatExpr& a, const MatExpr& b);
  friend MatExpr operator-(const MatExpr& a, const MatExpr& b);
  friend MatExpr operator*(double a, MatExpr b);

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<LinExpr> e_;
};

/// Identity-like MatExpr holding a single variable on every diagonal entry.
MatExpr scaled_identity(const LinExpr& e, int n);

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure, MaxIterations };

std::string to_string(Status s);

struct SolverOptions {
  double gap_tol = 1e-7;
  double feas_tol = 1e-7;
  int max_iter = 100;
  int refine_steps = 2;
  bool verbose = false;
};

struct SolveResult {
  Status status = Status::NumericalFailure;
  Vec y;                   // primal values per scalar variable
  double objective = 0.0;  // c'y at the returned point
  double dual_objective = 0.0;
  double gap = 0.0;
  double max_violation = 0.0;  // worst cone/equality residual at y
  int iterations = 0;

  bool optimal() const { return status == Status::Optimal; }
};

/// Conic program over scalar variables: linear objective, linear equalities,
/// scalar inequalities (nonnegative cone) and PSD constraints on affine
/// symmetric matrix expressions. Quadratic objectives are lowered by the
/// caller through lower_quadratic().
class Program {
 public:
  int add_scalar(const std::string& name);
  std::vector<int> add_vector(const std::string& name, int n);

  /// Symmetric matrix variable; entries above the diagonal alias the
  /// transposed position.
  struct SymHandle {
    int n = 0;
    std::vector<int> idx;  // row-major lower triangle
    int operator()(int i, int j) const {
      if (j > i) std::swap(i, j);
      return idx[i * (i + 1) / 2 + j];
    }
  };
  SymHandle add_symmetric(const std::string& name, int n);
  std::vector<int> add_diagonal(const std::string& name, int n);

  /// Rectangular matrix of fresh scalars, row-major.
  std::vector<int> add_matrix(const std::string& name, int rows, int cols);

  void add_equality(const LinExpr& e);  // e == 0
  void add_nonneg(const LinExpr& e);    // e >= 0
  int add_psd_block(const MatExpr& m);  // m is symmetric and PSD

  void add_cost(const LinExpr& e);  // objective += e (minimized)

  /// Epigraph lowering of |rows|^2: introduces t with the Schur block
  /// [[I, rows],[rows', t]] >= 0, adds t to the objective, returns t's index.
  int lower_quadratic(std::span<const LinExpr> rows, const std::string& name);

  SolveResult solve(const SolverOptions& opts = {}) const;

  /// Sparse SDPA text export (equalities are split into inequality pairs).
  void export_sdpa(std::ostream& os) const;
  void export_sdpa(const std::string& path) const;

  int num_vars() const { return static_cast<int>(names_.size()); }
  int num_equalities() const { return static_cast<int>(eqs_.size()); }
  int num_nonneg() const { return static_cast<int>(nonneg_.size()); }
  int num_psd_blocks() const { return static_cast<int>(psd_.size()); }
  int psd_block_dim(int k) const { return psd_[k].rows(); }
  const std::string& var_name(int i) const { return names_[i]; }
  const LinExpr& objective() const { return objective_; }

  static double eval(const LinExpr& e, const Vec& y);
  static Mat eval(const MatExpr& m, const Vec& y);
  const MatExpr& psd_block(int k) const { return psd_[k]; }
  const std::vector<LinExpr>& equalities() const { return eqs_; }
  const std::vector<LinExpr>& nonnegs() const { return nonneg_; }

 private:
  void check_expr(const LinExpr& e) const;

  std::vector<std::string> names_;
  std::vector<LinExpr> eqs_;
  std::vector<LinExpr> nonneg_;
  std::vector<MatExpr> psd_;
  LinExpr objective_;

  friend SolveResult solve_compiled(const Program&, const SolverOptions&);
};

}  // namespace dmpc::conic
