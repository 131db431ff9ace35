#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dmpc/conic.hpp"

using namespace dmpc;
using namespace dmpc::conic;

TEST_CASE("psd band: diag(x, 1-x) confines x to [0,1]") {
  for (double sign : {1.0, -1.0}) {
    Program p;
    int x = p.add_scalar("x");
    MatExpr m(2, 2);
    m.at(0, 0) = LinExpr::variable(x);
    m.at(1, 1) = LinExpr(1.0) - LinExpr::variable(x);
    p.add_psd_block(m);
    p.add_cost(LinExpr::variable(x) * sign);
    auto r = p.solve();
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.y(x) == doctest::Approx(sign > 0 ? 0.0 : 1.0).epsilon(1e-6));
  }
}

TEST_CASE("min x with [[x,1],[1,x]] psd gives x*=1") {
  // 2x2 PSD iff trace >= 0 and det >= 0: x >= 0 and x^2 >= 1, so x >= 1.
  Program p;
  int x = p.add_scalar("x");
  MatExpr m(2, 2);
  m.at(0, 0) = LinExpr::variable(x);
  m.at(0, 1) = LinExpr(1.0);
  m.at(1, 0) = LinExpr(1.0);
  m.at(1, 1) = LinExpr::variable(x);
  p.add_psd_block(m);
  p.add_cost(LinExpr::variable(x));
  auto r = p.solve();
  REQUIRE(r.status == Status::Optimal);
  CHECK(std::abs(r.y(x) - 1.0) < 1e-6);
  CHECK(r.gap <= 1e-6);
  CHECK(r.max_violation <= 1e-7);
  // weak duality bracket
  CHECK(r.dual_objective <= r.objective + 1e-6);
}

TEST_CASE("epigraph + negative diagonal entry is infeasible") {
  // t >= x^2 and -1 - t >= 0 cannot hold since t >= 0.
  Program p;
  int x = p.add_scalar("x");
  std::array<LinExpr, 1> rows = {LinExpr::variable(x)};
  int t = p.lower_quadratic(rows, "t");
  p.add_nonneg(LinExpr(-1.0) - LinExpr::variable(t));
  auto r = p.solve();
  CHECK(r.status == Status::Infeasible);
}

TEST_CASE("max trace(E) subject to E <= I") {
  Program p;
  auto E = p.add_symmetric("E", 2);
  MatExpr cap(2, 2);
  cap.set_block(0, 0, Mat::Identity(2, 2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) cap.at(i, j) -= LinExpr::variable(E(i, j));
  p.add_psd_block(cap);
  p.add_cost(-LinExpr::variable(E(0, 0)) - LinExpr::variable(E(1, 1)));
  auto r = p.solve();
  REQUIRE(r.status == Status::Optimal);
  CHECK(-r.objective == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.y(E(0, 0)) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.y(E(1, 1)) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(r.y(E(1, 0))) < 1e-5);
}

TEST_CASE("unbounded objective is certified") {
  Program p;
  int x = p.add_scalar("x");
  p.add_nonneg(-LinExpr::variable(x));  // x <= 0
  p.add_cost(LinExpr::variable(x));
  auto r = p.solve();
  CHECK(r.status == Status::Unbounded);
}

TEST_CASE("quadratic lowering") {
  SUBCASE("|z|^2 with z fixed at (3,4) gives t = 25") {
    Program p;
    auto z = p.add_vector("z", 2);
    p.add_equality(LinExpr::variable(z[0]) - 3.0);
    p.add_equality(LinExpr::variable(z[1]) - 4.0);
    std::array<LinExpr, 2> rows = {LinExpr::variable(z[0]), LinExpr::variable(z[1])};
    p.lower_quadratic(rows, "t");
    auto r = p.solve();
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective == doctest::Approx(25.0).epsilon(1e-6));
  }
  SUBCASE("|z-1|^2 free z attains 0 at z=1") {
    Program p;
    int z = p.add_scalar("z");
    std::array<LinExpr, 1> rows = {LinExpr::variable(z) - 1.0};
    p.lower_quadratic(rows, "t");
    auto r = p.solve();
    REQUIRE(r.status == Status::Optimal);
    CHECK(std::abs(r.objective) < 1e-6);
    CHECK(r.y(z) == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("stage cost 0.5|x|^2 + 0.1 u^2 at x=(1,0), u=2 contributes 0.9") {
    Program p;
    auto x = p.add_vector("x", 2);
    int u = p.add_scalar("u");
    p.add_equality(LinExpr::variable(x[0]) - 1.0);
    p.add_equality(LinExpr::variable(x[1]));
    p.add_equality(LinExpr::variable(u) - 2.0);
    const double sq = std::sqrt(0.5), sr = std::sqrt(0.1);
    std::array<LinExpr, 3> rows = {LinExpr::variable(x[0]) * sq, LinExpr::variable(x[1]) * sq,
                                   LinExpr::variable(u) * sr};
    p.lower_quadratic(rows, "t");
    auto r = p.solve();
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective == doctest::Approx(0.9).epsilon(1e-6));
  }
}

TEST_CASE("lambda-max via LMI matches eigen solver on random matrices") {
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    int n = 3 + trial;
    Mat C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = nd(rng);
    C = symmetrize(C);
    Program p;
    int t = p.add_scalar("t");
    MatExpr m(n, n);
    m.set_block(0, 0, -C);
    for (int i = 0; i < n; ++i) m.at(i, i) += LinExpr::variable(t);
    p.add_psd_block(m);
    p.add_cost(LinExpr::variable(t));
    auto r = p.solve();
    REQUIRE(r.status == Status::Optimal);
    Eigen::SelfAdjointEigenSolver<Mat> es(C, Eigen::EigenvaluesOnly);
    CHECK(r.objective == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-6));
  }
}

TEST_CASE("determinism: identical programs give identical results") {
  auto run = [] {
    Program p;
    int x = p.add_scalar("x");
    MatExpr m(2, 2);
    m.at(0, 0) = LinExpr::variable(x);
    m.at(0, 1) = LinExpr(1.0);
    m.at(1, 0) = LinExpr(1.0);
    m.at(1, 1) = LinExpr::variable(x) * 2.0 + 0.5;
    p.add_psd_block(m);
    p.add_cost(LinExpr::variable(x));
    return p.solve();
  };
  auto a = run();
  auto b = run();
  CHECK(a.status == b.status);
  CHECK(std::abs(a.objective - b.objective) <= 1e-9);
}

TEST_CASE("builder errors") {
  Program p;
  int x = p.add_scalar("x");
  SUBCASE("asymmetric block") {
    MatExpr m(2, 2);
    m.at(0, 1) = LinExpr::variable(x);
    m.at(1, 0) = LinExpr(1.0);
    CHECK_THROWS_AS(p.add_psd_block(m), AsymmetricExpression);
  }
  SUBCASE("unknown variable") {
    MatExpr m(1, 1);
    m.at(0, 0) = LinExpr::variable(17);
    CHECK_THROWS_AS(p.add_psd_block(m), UnknownVariable);
  }
  SUBCASE("empty program export") {
    Program q;
    std::ostringstream os;
    CHECK_THROWS_AS(q.export_sdpa(os), EmptyProgram);
  }
}

TEST_CASE("sdpa export of the smallest program has 1 variable and 1 block") {
  Program p;
  int x = p.add_scalar("x");
  MatExpr m(1, 1);
  m.at(0, 0) = LinExpr::variable(x) - 1.0;
  p.add_psd_block(m);
  p.add_cost(LinExpr::variable(x));
  std::ostringstream os;
  p.export_sdpa(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);  // comment
  std::getline(is, line);
  CHECK(line.substr(0, 1) == "1");
  std::getline(is, line);
  CHECK(line.substr(0, 1) == "1");
}

namespace {
// Runs the python reference solver on an exported file; returns objective.
double reference_solve(const Program& p) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path();
  fs::path in = dir / "dmpc_test_prog.dat-s";
  fs::path out = dir / "dmpc_test_prog.out";
  p.export_sdpa(in.string());
  std::string cmd = std::string("python3 ") + DMPC_SOURCE_DIR +
                    "/tools/check_sdpa.py " + in.string() + " > " + out.string();
  int rc = std::system(cmd.c_str());
  REQUIRE(rc == 0);
  std::ifstream f(out);
  std::string status;
  double value = 0;
  f >> status >> value;
  REQUIRE(status == "optimal");
  return value;
}
}  // namespace

TEST_CASE("exported file re-solved externally matches internal optimum") {
  std::mt19937 rng(21);
  std::normal_distribution<double> nd;
  Program p;
  auto x = p.add_vector("x", 3);
  // random feasible SDP: t*I + sum x_i C_i - C0 >= 0 plus box rows, min c'x
  Mat C0(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) C0(i, j) = nd(rng);
  C0 = symmetrize(C0);
  MatExpr m(3, 3);
  m.set_block(0, 0, -C0);
  for (int k = 0; k < 3; ++k) {
    Mat Ck(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Ck(i, j) = nd(rng);
    Ck = symmetrize(Ck);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m.at(i, j) += LinExpr::variable(x[k], Ck(i, j));
  }
  for (int i = 0; i < 3; ++i) m.at(i, i) += 8.0;
  p.add_psd_block(m);
  for (int k = 0; k < 3; ++k) {
    p.add_nonneg(LinExpr(1.0) - LinExpr::variable(x[k]));
    p.add_nonneg(LinExpr(1.0) + LinExpr::variable(x[k]));
  }
  p.add_equality(LinExpr::variable(x[0]) + LinExpr::variable(x[1]) - 0.3);
  p.add_cost(LinExpr::variable(x[0]) + 0.5 * LinExpr::variable(x[1]) -
             0.25 * LinExpr::variable(x[2]));
  auto r = p.solve();
  REQUIRE(r.status == Status::Optimal);
  double ref = reference_solve(p);
  CHECK(r.objective == doctest::Approx(ref).epsilon(1e-5));
}
