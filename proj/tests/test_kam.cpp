#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kamnf/apps.hpp"
#include "kamnf/kam.hpp"

using namespace kamnf;
using namespace kamnf::testing;

TEST_CASE("schedule identities") {
  const double eps0 = 1e-6;
  Schedule sch(eps0, 1.0, 1.0, 2);
  const double pi = std::acos(-1.0);
  CHECK(sch.Cstar == doctest::Approx(3.0 / (pi * pi)));
  CHECK(sch.delta0 == doctest::Approx(std::pow(eps0, 0.25)));
  CHECK(sch.kappa0 == doctest::Approx(std::pow(eps0, 1.0 / 3.0)));
  for (int j = 1; j <= 5; ++j)
    CHECK(sch.gap(j) == doctest::Approx(sch.Cstar / (double(j) * j)));
  // sigma_j telescopes down to sigma0 / 2
  CHECK(sch.sigma(0) == doctest::Approx(1.0));
  CHECK(sch.sigma(1) == doctest::Approx(1.0 - sch.Cstar));
  CHECK(sch.sigma(100000) > 0.5);
  CHECK(sch.sigma(100000) < 0.5 + 1e-4);
  // mu_j = eps_{j-1}^{2/5} mu0 and kappa_j = eps_j^{1/64}
  CHECK(sch.mu(0, 0.0) == doctest::Approx(1.0));
  CHECK(sch.mu(3, 1e-8) == doctest::Approx(std::pow(1e-8, 0.4)));
  CHECK(sch.kappa(0, eps0) == doctest::Approx(sch.kappa0));
  CHECK(sch.kappa(2, 1e-12) == doctest::Approx(std::pow(1e-12, 1.0 / 64.0)));
  // N_j = gap_j^{-1} ln(1/eps)
  CHECK(sch.N(1, 1e-8) ==
        int(std::ceil(std::log(1e8) / sch.gap(1))));
}

TEST_CASE("predicted epsilon: zero, superlinearity, monotone in eps") {
  Schedule sch(1e-4, 1.0, 1.0, 2);
  CHECK(predicted_epsilon(1e-4, 0.0, sch, 1) == 0.0);
  const double p1 = predicted_epsilon(1e-4, 1e-6, sch, 1);
  const double p2 = predicted_epsilon(1e-4, 2e-6, sch, 1);
  CHECK(p2 > 2 * p1);  // each addend is superlinear in eps_j
  CHECK(predicted_epsilon(1e-4, 1e-5, sch, 1) > p1);
  CHECK(p1 > 0);
}

namespace {

BuiltModel desk_model(int W_max, double eps, int D_max = 4, int K_max = 10) {
  KGProblem prob;
  prob.model = kg_model();
  prob.A = kg_admissible();
  prob.g = KGNonlin::U2;
  Eigen::VectorXd rho(2);
  rho << 0.337, 0.418;
  BuiltModel bm = kg_build(prob, rho, W_max, D_max, K_max);
  const double f0 = jet_norm(bm.f.jet, 1.0, 1.0, 2.0, 0.25, false);
  if (f0 > 0) bm.f *= Cx(eps / f0);
  return bm;
}

}  // namespace

TEST_CASE("zero perturbation converges at step zero") {
  BuiltModel bm = desk_model(4, 1e-6);
  PolyHamiltonian zero(2, *bm.cl);
  Schedule sch(1e-6, 1.0, 1.0, 2);
  KamParams p;
  p.J_max = 3;
  p.tol = 1e-30;
  ConvergenceReport rep = run(bm.h0, std::move(zero), sch, p);
  CHECK(rep.status == "converged");
  CHECK(rep.steps == 0);
}

TEST_CASE("jet-free perturbation needs no step") {
  BuiltModel bm = desk_model(4, 1e-6);
  // strip the jet: only degree >= 3 factored terms remain
  PolyHamiltonian f = bm.f;
  f.jet = Jet(2, *bm.cl);
  Schedule sch(1e-6, 1.0, 1.0, 2);
  KamParams p;
  p.J_max = 1;
  KamState st = kam_init(bm.h0, f, sch, p);
  CHECK(st.eps == 0.0);  // measured epsilon is the jet norm
  std::string why;
  CHECK(kam_step(st, sch, p, &why));
  // the generator is zero, so the jet stays empty
  CHECK(st.log.back().S_norm == 0.0);
  CHECK(st.eps == 0.0);
}

TEST_CASE("one desk step contracts the jet norm by 10x or better") {
  BuiltModel bm = desk_model(5, 1e-6);
  Schedule sch(1e-6, 1.0, 1.0, 2);
  KamParams p;
  p.J_max = 1;
  ConvergenceReport rep = run(bm.h0, std::move(bm.f), sch, p);
  REQUIRE(rep.eps.size() >= 2);
  CHECK(rep.eps[1] / rep.eps[0] <= 1e-1);
  CHECK(rep.status != "excluded");
}

TEST_CASE("normal form is preserved along the iteration") {
  BuiltModel bm = desk_model(5, 1e-6);
  Schedule sch(1e-6, 1.0, 1.0, 2);
  KamParams p;
  p.J_max = 1;
  KamState st = kam_init(bm.h0, std::move(bm.f), sch, p);
  std::string why;
  REQUIRE(kam_step(st, sch, p, &why));
  CHECK(is_normal_form(st.h.A, 1e-10));
  CHECK(st.j == 1);
  CHECK(st.eps < st.eps_prev);
}

TEST_CASE("report serialization carries the epsilon ladder") {
  ConvergenceReport rep;
  rep.eps = {1e-6, 1e-9};
  rep.omega_drift = {0.0, 1e-8};
  rep.A_drift = {0.0, 2e-8};
  rep.phi_disp = {1e-7};
  rep.exponents = {1.5};
  rep.status = "maxiter";
  rep.steps = 1;
  const std::string j = rep.to_json();
  CHECK(j.find("\"eps\"") != std::string::npos);
  CHECK(j.find("maxiter") != std::string::npos);
}
