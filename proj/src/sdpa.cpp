// Sparse SDPA text export. The format describes
//
//     minimize    c'x
//     subject to  X = sum_i x_i F_i - F0,   X >= 0 (block diagonal)
//
// which matches the program's PSD constraints with F0 negated. Scalar
// inequalities go into one diagonal block; each equality is split into an
// opposing pair of diagonal entries.

#include <cstdio>
#include <fstream>
#include <ostream>

#include "dmpc/conic.hpp"

namespace dmpc::conic {

namespace {
void print_entry(std::ostream& os, int mat, int blk, int i, int j, double v) {
  if (v == 0.0) return;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << mat << ' ' << blk << ' ' << i << ' ' << j << ' ' << buf << '\n';
}
}  // namespace

void Program::export_sdpa(std::ostream& os) const {
  const int m = num_vars();
  const int diag_dim = num_nonneg() + 2 * num_equalities();
  if (m == 0 || (diag_dim == 0 && psd_.empty()))
    throw EmptyProgram("nothing to export: program has no variables or constraints");

  os << "* sparse SDPA export\n";
  os << m << " = mdim\n";
  const int nblocks = (diag_dim > 0 ? 1 : 0) + static_cast<int>(psd_.size());
  os << nblocks << " = nblocks\n";
  if (diag_dim > 0) os << -diag_dim << ' ';
  for (const auto& blk : psd_) os << blk.rows() << ' ';
  os << '\n';
  {
    char buf[64];
    Vec c = Vec::Zero(m);
    for (const auto& [i, v] : objective_.terms()) c(i) = v;
    for (int i = 0; i < m; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", c(i));
      os << buf << (i + 1 == m ? "" : " ");
    }
    os << '\n';
  }

  int blk = 1;
  if (diag_dim > 0) {
    int d = 1;
    auto emit_row = [&](const LinExpr& e, double sign) {
      print_entry(os, 0, blk, d, d, -sign * e.constant());
      for (const auto& [i, v] : e.terms()) print_entry(os, i + 1, blk, d, d, sign * v);
      ++d;
    };
    for (const auto& e : nonneg_) emit_row(e, 1.0);
    for (const auto& e : eqs_) {
      emit_row(e, 1.0);
      emit_row(e, -1.0);
    }
    ++blk;
  }
  for (const auto& mexpr : psd_) {
    for (int i = 0; i < mexpr.rows(); ++i)
      for (int j = i; j < mexpr.cols(); ++j) {
        const LinExpr& e = mexpr.at(i, j);
        print_entry(os, 0, blk, i + 1, j + 1, -e.constant());
        for (const auto& [vi, v] : e.terms()) print_entry(os, vi + 1, blk, i + 1, j + 1, v);
      }
    ++blk;
  }
}

void Program::export_sdpa(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  export_sdpa(f);
  if (!f.good()) throw IoError("write failed for " + path);
}

}  // namespace dmpc::conic
