#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kamnf/apps.hpp"

using namespace kamnf;
using namespace kamnf::testing;

namespace {
const double PI = std::acos(-1.0);
}

TEST_CASE("low-order spherical harmonics against closed forms") {
  // Y_{0,0} = 1/sqrt(4 pi), Y_{1,0} = sqrt(3/4pi) cos(theta)
  CHECK(sph_harmonic(0, 0, 0.7, 1.3) ==
        doctest::Approx(1.0 / std::sqrt(4 * PI)).epsilon(1e-12));
  for (double th : {0.3, 1.1, 2.5})
    CHECK(sph_harmonic(1, 0, th, 0.4) ==
          doctest::Approx(std::sqrt(3 / (4 * PI)) * std::cos(th))
              .epsilon(1e-12));
  // Y_{1,1} = sqrt(3/4pi) sin(theta) cos(phi) in the real convention
  CHECK(sph_harmonic(1, 1, 0.9, 0.2) ==
        doctest::Approx(std::sqrt(3 / (4 * PI)) * std::sin(0.9) *
                        std::cos(0.2))
            .epsilon(1e-12));
  CHECK(sph_harmonic(1, -1, 0.9, 0.2) ==
        doctest::Approx(std::sqrt(3 / (4 * PI)) * std::sin(0.9) *
                        std::sin(0.2))
            .epsilon(1e-12));
}

TEST_CASE("spherical harmonics are orthonormal under the product rule") {
  SphereQuad q = sphere_quadrature(6);
  for (auto [j1, l1] : std::vector<std::pair<int, int>>{
           {0, 0}, {1, 1}, {2, -1}, {3, 2}, {5, -4}})
    for (auto [j2, l2] : std::vector<std::pair<int, int>>{
             {0, 0}, {1, 1}, {2, -1}, {3, 2}, {5, -4}}) {
      double s = 0;
      for (size_t i = 0; i < q.w.size(); ++i)
        s += q.w[i] * sph_harmonic(j1, l1, q.theta[i], q.phi[i]) *
             sph_harmonic(j2, l2, q.theta[i], q.phi[i]);
      const double want = (j1 == j2 && l1 == l2) ? 1.0 : 0.0;
      CHECK(std::abs(s - want) < 1e-8);
    }
}

TEST_CASE("sum over orders of Y_{j,l}^2 is (2j+1)/4pi") {
  for (int q = 0; q < 20; ++q) {
    const double th = 0.1 + 0.15 * q, ph = 0.37 * q;
    for (int j = 0; j <= 6; ++j) {
      double s = 0;
      for (int l = -j; l <= j; ++l) {
        const double y = sph_harmonic(j, l, th, ph);
        s += y * y;
      }
      CHECK(std::abs(s - (2 * j + 1) / (4 * PI)) < 1e-12);
    }
  }
}

TEST_CASE("hermite functions: ground state and orthonormality") {
  for (double x : {-1.5, 0.0, 0.8})
    CHECK(hermite(1, x) ==
          doctest::Approx(std::pow(PI, -0.25) * std::exp(-0.5 * x * x))
              .epsilon(1e-12));
  PlaneQuad q = plane_quadrature(40);
  // use the 1-D rule hiding inside the product rule: integrate along x1
  // with x2 fixed is not available, so check 2-D orthonormality of the basis
  for (int j1 = 1; j1 <= 3; ++j1)
    for (int l1 = 1; l1 <= j1; ++l1)
      for (int j2 = 1; j2 <= 3; ++j2)
        for (int l2 = 1; l2 <= j2; ++l2) {
          double s = 0;
          for (size_t i = 0; i < q.w.size(); ++i)
            s += q.w[i] * qho_basis(j1, l1, q.x1[i], q.x2[i]) *
                 qho_basis(j2, l2, q.x1[i], q.x2[i]);
          const double want = (j1 == j2 && l1 == l2) ? 1.0 : 0.0;
          CHECK(std::abs(s - want) < 1e-8);
        }
}

TEST_CASE("plane kernel matches the explicit sum") {
  for (int j : {1, 3, 7}) {
    double s = 0;
    for (int l = 1; l <= j; ++l) {
      const double b = qho_basis(j, l, 0.4, -0.9);
      s += b * b;
    }
    CHECK(qho_kernel(j, 0.4, -0.9) == doctest::Approx(s).epsilon(1e-13));
  }
}

TEST_CASE("plane kernel diagonal stays bounded across levels") {
  // max_x K_j(x, x) should not blow up with j (checked at acceptance with a
  // tighter window; here just finiteness and positivity)
  for (int j = 1; j <= 10; ++j) {
    double mx = 0;
    for (double x = -4; x <= 4; x += 0.25)
      mx = std::max(mx, qho_kernel(j, x, x));
    CHECK(mx > 0);
    CHECK(std::isfinite(mx));
  }
}

TEST_CASE("wave-equation model assembly") {
  KGProblem prob;
  prob.model = kg_model();
  prob.A = kg_admissible();
  prob.g = KGNonlin::U2;
  Eigen::VectorXd rho(2);
  rho << 0.337, 0.418;
  BuiltModel bm = kg_build(prob, rho, 5, 4, 8);

  // frequencies of the torus variables match the parameterized eigenvalues
  Eigen::VectorXd w0 = omega0(prob.model, prob.A, rho);
  CHECK((bm.h0.omega - w0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(is_normal_form(bm.h0.A, 1e-12));

  // the perturbation is real: evaluating at a real point gives a real value
  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(2), th(2);
  th << Cx(0.3, 0), Cx(1.1, 0);
  ModeVector z(*bm.cl);
  for (int a = 0; a < bm.cl->n_clusters(); ++a)
    for (int i = 0; i < z.v[a].size(); ++i)
      z.v[a][i] = Cx(0.01 / (1.0 + a + i), 0);
  Cx val = bm.f.eval(r, th, z);
  CHECK(std::abs(val.imag()) < 1e-12 * (1 + std::abs(val.real())));
  CHECK(std::abs(val) > 0);
}

TEST_CASE("oscillator model assembly and nonlinearity sign") {
  QHOProblem prob;
  prob.model.kind = ModelKind::QHO_R2;
  prob.model.m = 1.0;
  prob.model.delta = 0.5;
  prob.model.n = 2;
  prob.A.modes = {{1, 1}, {2, 1}};
  prob.A.actions = {1.0, 1.0};
  Eigen::VectorXd rho(2);
  rho << 0.21, 0.34;

  prob.F = QHONonlin::NLS_PLUS;
  BuiltModel bp = qho_build(prob, rho, 4, 4, 8);
  prob.F = QHONonlin::NLS_MINUS;
  BuiltModel bmn = qho_build(prob, rho, 4, 4, 8);

  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(2), th(2);
  th << Cx(0.5, 0), Cx(0.9, 0);
  // each build owns its clustering, so make one vector per model
  auto fill = [](const Clustering& cl) {
    ModeVector z(cl);
    for (int a = 0; a < cl.n_clusters(); ++a)
      for (int i = 0; i < z.v[a].size(); ++i)
        z.v[a][i] = Cx(0.02 / (1.0 + a), 0);
    return z;
  };
  Cx vp = bp.f.eval(r, th, fill(*bp.cl));
  Cx vm = bmn.f.eval(r, th, fill(*bmn.cl));
  CHECK(vp.real() == doctest::Approx(-vm.real()).epsilon(1e-10));
  CHECK(std::abs(vp) > 0);
}

TEST_CASE("hessian cross-check tables are finite and symmetric") {
  KGProblem prob;
  prob.model = kg_model();
  prob.A = kg_admissible();
  prob.g = KGNonlin::U2;
  Eigen::MatrixXd H = kg_hessian_hs(prob, 5);
  REQUIRE(H.rows() == H.cols());
  CHECK(H.rows() >= 5);
  for (int a = 0; a < H.rows(); ++a)
    for (int b = 0; b < H.cols(); ++b) {
      CHECK(std::isfinite(H(a, b)));
      CHECK(H(a, b) >= 0);
      CHECK(H(a, b) == doctest::Approx(H(b, a)).epsilon(1e-12));
    }
}
