#include "dmpc/conic.hpp"

#include <algorithm>
#include <cmath>

namespace dmpc::conic {

LinExpr LinExpr::variable(int index, double coef) {
  LinExpr e;
  if (coef != 0.0) e.terms_.emplace_back(index, coef);
  return e;
}

namespace {
void merge_into(std::vector<std::pair<int, double>>& dst,
                const std::vector<std::pair<int, double>>& src, double scale) {
  if (src.empty() || scale == 0.0) return;
  std::vector<std::pair<int, double>> out;
  out.reserve(dst.size() + src.size());
  size_t i = 0, j = 0;
  while (i < dst.size() || j < src.size()) {
    if (j == src.size() || (i < dst.size() && dst[i].first < src[j].first)) {
      out.push_back(dst[i++]);
    } else if (i == dst.size() || src[j].first < dst[i].first) {
      out.emplace_back(src[j].first, scale * src[j].second);
      ++j;
    } else {
      double v = dst[i].second + scale * src[j].second;
      if (v != 0.0) out.emplace_back(dst[i].first, v);
      ++i;
      ++j;
    }
  }
  dst = std::move(out);
}
}  // namespace

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  merge_into(terms_, o.terms_, 1.0);
  constant_ += o.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  merge_into(terms_, o.terms_, -1.0);
  constant_ -= o.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double v) {
  if (v == 0.0) {
    terms_.clear();
    constant_ = 0.0;
    return *this;
  }
  for (auto& t : terms_) t.second *= v;
  constant_ *= v;
  return *this;
}

bool LinExpr::same_as(const LinExpr& o, double tol) const {
  if (std::abs(constant_ - o.constant_) > tol) return false;
  if (terms_.size() != o.terms_.size()) return false;
  for (size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].first != o.terms_[i].first) return false;
    if (std::abs(terms_[i].second - o.terms_[i].second) > tol) return false;
  }
  return true;
}

MatExpr::MatExpr(const Mat& constant)
    : rows_(static_cast<int>(constant.rows())), cols_(static_cast<int>(constant.cols())),
      e_(rows_ * cols_) {
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) at(i, j) = LinExpr(constant(i, j));
}

void MatExpr::set_block(int r0, int c0, const Mat& constant) {
  for (int i = 0; i < constant.rows(); ++i)
    for (int j = 0; j < constant.cols(); ++j) at(r0 + i, c0 + j) = LinExpr(constant(i, j));
}

void MatExpr::set_block(int r0, int c0, const MatExpr& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) at(r0 + i, c0 + j) = m.at(i, j);
}

void MatExpr::add_block(int r0, int c0, const MatExpr& m, double scale) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) at(r0 + i, c0 + j) += m.at(i, j) * scale;
}

MatExpr MatExpr::transpose() const {
  MatExpr t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
  return t;
}

bool MatExpr::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (int i = 0; i < rows_; ++i)
    for (int j = i + 1; j < cols_; ++j)
      if (!at(i, j).same_as(at(j, i), tol)) return false;
  return true;
}

MatExpr operator*(const Mat& a, const MatExpr& b) {
  MatExpr out(static_cast<int>(a.rows()), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      LinExpr acc;
      for (int k = 0; k < a.cols(); ++k)
        if (a(i, k) != 0.0) acc += b.at(k, j) * a(i, k);
      out.at(i, j) = std::move(acc);
    }
  return out;
}

MatExpr operator*(const MatExpr& a, const Mat& b) {
  MatExpr out(a.rows(), static_cast<int>(b.cols()));
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      LinExpr acc;
      for (int k = 0; k < b.rows(); ++k)
        if (b(k, j) != 0.0) acc += a.at(i, k) * b(k, j);
      out.at(i, j) = std::move(acc);
    }
  return out;
}

MatExpr operator+(const MatExpr& a, const MatExpr& b) {
  MatExpr out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j) + b.at(i, j);
  return out;
}

MatExpr operator-(const MatExpr& a, const MatExpr& b) {
  MatExpr out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j) - b.at(i, j);
  return out;
}

MatExpr operator*(double a, MatExpr b) {
  MatExpr out(b.rows(), b.cols());
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) out.at(i, j) = b.at(i, j) * a;
  return out;
}

MatExpr scaled_identity(const LinExpr& e, int n) {
  MatExpr m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = e;
  return m;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalFailure: return "numerical-failure";
    case Status::MaxIterations: return "max-iterations";
  }
  return "?";
}

int Program::add_scalar(const std::string& name) {
  names_.push_back(name);
  return static_cast<int>(names_.size()) - 1;
}

std::vector<int> Program::add_vector(const std::string& name, int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = add_scalar(name + "[" + std::to_string(i) + "]");
  return idx;
}

Program::SymHandle Program::add_symmetric(const std::string& name, int n) {
  SymHandle h;
  h.n = n;
  h.idx.reserve(n * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      h.idx.push_back(add_scalar(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]"));
  return h;
}

std::vector<int> Program::add_diagonal(const std::string& name, int n) {
  return add_vector(name, n);
}

std::vector<int> Program::add_matrix(const std::string& name, int rows, int cols) {
  std::vector<int> idx(rows * cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      idx[i * cols + j] =
          add_scalar(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
  return idx;
}

void Program::check_expr(const LinExpr& e) const {
  if (e.max_var() >= num_vars())
    throw UnknownVariable("expression references variable " + std::to_string(e.max_var()) +
                          " but the program has " + std::to_string(num_vars()));
}

void Program::add_equality(const LinExpr& e) {
  check_expr(e);
  eqs_.push_back(e);
}

void Program::add_nonneg(const LinExpr& e) {
  check_expr(e);
  nonneg_.push_back(e);
}

int Program::add_psd_block(const MatExpr& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("PSD block must be square");
  if (!m.is_symmetric()) throw AsymmetricExpression("PSD block expression is not symmetric");
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j <= i; ++j) check_expr(m.at(i, j));
  psd_.push_back(m);
  return static_cast<int>(psd_.size()) - 1;
}

void Program::add_cost(const LinExpr& e) {
  check_expr(e);
  objective_ += e;
}

int Program::lower_quadratic(std::span<const LinExpr> rows, const std::string& name) {
  const int r = static_cast<int>(rows.size());
  int t = add_scalar(name);
  MatExpr m(r + 1, r + 1);
  m.set_block(0, 0, Mat::Identity(r, r));
  for (int i = 0; i < r; ++i) {
    m.at(i, r) = rows[i];
    m.at(r, i) = rows[i];
  }
  m.at(r, r) = LinExpr::variable(t);
  add_psd_block(m);
  add_cost(LinExpr::variable(t));
  return t;
}

double Program::eval(const LinExpr& e, const Vec& y) {
  double v = e.constant();
  for (const auto& [i, c] : e.terms()) v += c * y(i);
  return v;
}

Mat Program::eval(const MatExpr& m, const Vec& y) {
  Mat out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = eval(m.at(i, j), y);
  return out;
}

SolveResult Program::solve(const SolverOptions& opts) const { return solve_compiled(*this, opts); }

}  // namespace dmpc::conic
