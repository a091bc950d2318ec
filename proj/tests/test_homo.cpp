#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kamnf/homo.hpp"

using namespace kamnf;
using namespace kamnf::testing;

namespace {

NormalFormHam diagonal_ham(const Clustering& cl, const Eigen::VectorXd& omega) {
  NormalFormHam h;
  h.omega = omega;
  h.A = BlockMatrix(cl, true);
  SpectralModel md = kg_model();
  for (int a = 0; a < cl.n_clusters(); ++a) {
    const int d = cl.levels[a].dim();
    Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    for (int p = 0; p < d; ++p) {
      const double lam = eigenvalue(md, cl.levels[a].modes[p]);
      blk(2 * p, 2 * p) = lam;
      blk(2 * p + 1, 2 * p + 1) = lam;
    }
    h.A.set_block(a, a, blk);
  }
  return h;
}

Eigen::VectorXd desk_omega() {
  Eigen::VectorXd om(2);
  om << 1.0, std::sqrt(2.0);
  return om;
}

}  // namespace

TEST_CASE("scalar solve: single-mode oracle") {
  FourierSeries<Cx> psi;
  psi.n = 2;
  psi.add({1, 0, 0, 0}, Cx(1, 0));
  ScalarSolution s = solve_scalar(psi, desk_omega(), 1e-3, 4, 1.0, 0.9);
  // <omega, d_theta phi> = psi  =>  phi_k = -i psi_k / <k, omega>
  CHECK(std::abs(*s.phi.find({1, 0, 0, 0}) - Cx(0, -1)) < 1e-15);
  CHECK(s.R.c.empty());
  CHECK_FALSE(s.audit.any_excluded());
  CHECK(s.audit.fam[0].min_div == doctest::Approx(1.0));
}

TEST_CASE("scalar solve: tail beyond N goes to the remainder") {
  FourierSeries<Cx> psi;
  psi.n = 2;
  psi.add({3, 2, 0, 0}, Cx(0, 2));
  ScalarSolution s = solve_scalar(psi, desk_omega(), 1e-3, 4, 1.0, 0.9);
  CHECK(s.phi.c.empty());
  CHECK(std::abs(*s.R.find({3, 2, 0, 0}) - Cx(0, 2)) < 1e-16);
}

TEST_CASE("scalar solve: tight divisor flips the exclusion flag") {
  FourierSeries<Cx> psi;
  psi.n = 2;
  psi.add({-1, 1, 0, 0}, Cx(1, 0));  // divisor sqrt(2) - 1 = 0.414
  ScalarSolution ok = solve_scalar(psi, desk_omega(), 0.1, 4, 1.0, 0.9);
  CHECK_FALSE(ok.audit.any_excluded());
  ScalarSolution bad = solve_scalar(psi, desk_omega(), 0.5, 4, 1.0, 0.9);
  CHECK(bad.audit.any_excluded());
  CHECK(bad.audit.fam[0].min_div == doctest::Approx(std::sqrt(2.0) - 1));
}

TEST_CASE("full solve: residual at machine precision, normal-form correction") {
  auto cl = kg_clustering(5);
  NormalFormHam h = diagonal_ham(*cl, desk_omega());
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Jet f = random_jet(2, *cl, 3, 1e-6, seed);
    HomoSolution sol = solve_homological(f, h, 1e-6, 3, 1.0, 0.9);
    REQUIRE_FALSE(sol.audit.any_excluded());
    const double res = homological_residual(f, h, sol, 12, 0.9);
    const double fn = jet_norm(f, 1.0, 1.0, 2.0, 0.25, false);
    CHECK(res <= 1e-12 * fn);
    CHECK(is_normal_form(sol.B, 1e-10));
  }
}

TEST_CASE("solution and correction are real objects") {
  auto cl = kg_clustering(4);
  NormalFormHam h = diagonal_ham(*cl, desk_omega());
  Jet f = random_jet(2, *cl, 2, 1e-4, 9);
  HomoSolution sol = solve_homological(f, h, 1e-6, 2, 1.0, 0.9);
  // reality: symmetrization is a no-op on S
  Jet s2 = sol.S;
  s2.symmetrize_real();
  s2 *= Cx(-1);
  s2 += sol.S;
  CHECK(s2.is_zero(1e-13));
  // B is a real matrix up to roundoff
  double im = 0;
  for (const auto& [k, M] : sol.B.blocks)
    im = std::max(im, M.imag().cwiseAbs().maxCoeff());
  CHECK(im < 1e-13);
  CHECK(std::abs(sol.c.imag()) < 1e-13);
}

TEST_CASE("remainder holds exactly the over-cap Fourier modes of f") {
  auto cl = kg_clustering(4);
  NormalFormHam h = diagonal_ham(*cl, desk_omega());
  Jet f = random_jet(2, *cl, 4, 1e-4, 10);
  const int N = 2;
  HomoSolution sol = solve_homological(f, h, 1e-6, N, 1.0, 0.9);
  for (const auto& [k, v] : sol.R.ftheta.c) CHECK(l1(k) > N);
  for (const auto& [k, v] : sol.R.fzz.c) CHECK(l1(k) > N);
  // and S only keeps solvable modes
  for (const auto& [k, v] : sol.S.ftheta.c) CHECK(l1(k) <= N);
}

TEST_CASE("audit: linear family threshold scales with the cluster weight") {
  auto cl = kg_clustering(5);
  NormalFormHam h = diagonal_ham(*cl, desk_omega());
  Jet f = random_jet(2, *cl, 2, 1e-4, 11);
  HomoSolution sol = solve_homological(f, h, 1e-6, 2, 1.0, 0.9);
  // every family saw at least one divisor and recorded a positive minimum
  for (int fam = 0; fam < 4; ++fam) {
    CHECK(sol.audit.fam[fam].min_div > 0);
    CHECK(sol.audit.fam[fam].min_div < 1e30);
  }
}

TEST_CASE("exact resonance: double-sum divisor vanishes at the tuned mass") {
  // omega_2 = sqrt(7.75) at rho = 1.5 makes 4 omega_2 = 2 lambda_5 exactly
  SpectralModel md = kg_model(1.0, 0.5);
  AdmissibleSet A = kg_admissible();
  Clustering cl = remove_admissible(enumerate_modes(md, 6), A);
  Eigen::VectorXd rho(2);
  rho << 1.5, 1.5;
  NormalFormHam h = diagonal_ham(cl, omega0(md, A, rho));
  Jet f = random_jet(2, cl, 4, 1e-6, 7);
  HomoSolution sol = solve_homological(f, h, 1e-6, 4, 1.0, 0.9);
  CHECK(sol.audit.fam[2].min_div < 1e-12);
  CHECK(sol.audit.any_excluded());
}

TEST_CASE("audit merge keeps the per-family minima") {
  DivisorAudit a, b;
  a.fam[1].observe(0.5, {1, 0, 0, 0}, 0, -1, 0.1);
  b.fam[1].observe(0.2, {0, 1, 0, 0}, 2, -1, 0.1);
  b.fam[3].observe(0.05, {1, 1, 0, 0}, 1, 2, 0.1);
  a.merge(b);
  CHECK(a.fam[1].min_div == doctest::Approx(0.2));
  CHECK(a.fam[1].a == 2);
  CHECK(a.any_excluded());  // 0.05 < 0.1 in family 3
}
