#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kamnf/flows.hpp"

using namespace kamnf;
using namespace kamnf::testing;

namespace {

// polynomial with one cubic and one quartic factored term on top of a jet
PolyHamiltonian sample_poly(const Clustering& cl, std::uint64_t seed,
                            double amp) {
  Rng r(seed);
  PolyHamiltonian h(2, cl);
  h.D_max = 4;
  h.K_max = 16;
  h.jet = random_jet(2, cl, 2, amp, seed);
  {
    HighTerm t;  // c(theta) r_0 <v, zeta>
    t.alpha = {1, 0, 0, 0};
    t.coeff.n = 2;
    t.coeff.add({1, 0, 0, 0}, Cx(0.5 * amp, 0.1 * amp));
    t.coeff.add({-1, 0, 0, 0}, Cx(0.5 * amp, -0.1 * amp));
    t.factors.push_back(make_vec_factor(random_mode_vector(cl, r, 2.0)));
    h.terms.push_back(std::move(t));
  }
  {
    HighTerm t;  // c(theta) <v, zeta> zeta^T Q zeta
    t.alpha = {0, 0, 0, 0};
    t.coeff.n = 2;
    t.coeff.add({0, 1, 0, 0}, Cx(0.3 * amp, 0));
    t.coeff.add({0, -1, 0, 0}, Cx(0.3 * amp, 0));
    t.factors.push_back(make_vec_factor(random_mode_vector(cl, r, 2.0)));
    t.factors.push_back(
        make_quad_factor(random_block_matrix(cl, r, 2.0, false)));
    h.terms.push_back(std::move(t));
  }
  return h;
}

struct TestPoint {
  Eigen::VectorXcd r, th;
  ModeVector z;
};

TestPoint sample_point(const Clustering& cl, std::uint64_t seed, double zamp) {
  Rng rg(seed);
  TestPoint p;
  p.r.resize(2);
  p.th.resize(2);
  for (int i = 0; i < 2; ++i) {
    p.r[i] = Cx(0.05 * rg.u(), 0);
    p.th[i] = Cx(2.0 * rg.u(), 0);
  }
  p.z = random_mode_vector(cl, rg, 1.5);
  p.z *= Cx(zamp);
  return p;
}

// pointwise bracket {S, h} via exact S-gradients and 4th-order finite
// differences of h
Cx bracket_fd(const Jet& S, const PolyHamiltonian& h, const TestPoint& p) {
  const double e = 1e-3;
  auto d4 = [&](auto&& eval_at) {
    return (8.0 * (eval_at(e) - eval_at(-e)) -
            (eval_at(2 * e) - eval_at(-2 * e))) /
           (12.0 * e);
  };
  Cx acc = 0;
  const Eigen::VectorXcd Sr = S.grad_r(p.th);
  const Eigen::VectorXcd Sth = S.grad_theta(p.r, p.th, p.z);
  for (int i = 0; i < 2; ++i) {
    acc += Sr[i] * d4([&](double dl) {
      Eigen::VectorXcd th = p.th;
      th[i] += dl;
      return h.eval(p.r, th, p.z);
    });
    acc -= Sth[i] * d4([&](double dl) {
      Eigen::VectorXcd r = p.r;
      r[i] += dl;
      return h.eval(r, p.th, p.z);
    });
  }
  // <J grad_z S, grad_z h> = directional derivative of h along J grad_z S
  ModeVector u = S.grad_zeta(p.th, p.z).applied_J();
  acc += d4([&](double dl) {
    ModeVector z = p.z;
    ModeVector du = u;
    du *= Cx(dl);
    z += du;
    return h.eval(p.r, p.th, z);
  });
  return acc;
}

}  // namespace

TEST_CASE("poisson of a factored polynomial matches the pointwise bracket") {
  auto cl = kg_clustering(3);
  PolyHamiltonian h = sample_poly(*cl, 51, 1.0);
  Jet S = random_jet(2, *cl, 2, 0.5, 52);
  PolyHamiltonian pb = poisson(S, h, 0.4, 1.0, 2.0, 0.0);
  for (int q = 0; q < 4; ++q) {
    TestPoint p = sample_point(*cl, 100 + q, 0.3);
    const Cx want = bracket_fd(S, h, p);
    const Cx got = pb.eval(p.r, p.th, p.z);
    CHECK(std::abs(got - want) < 1e-7 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("compact merges duplicates without changing values") {
  auto cl = kg_clustering(3);
  PolyHamiltonian h = sample_poly(*cl, 61, 1.0);
  PolyHamiltonian twice = h;
  twice += h;
  const size_t before = twice.terms.size();
  twice.compact(0.4, 1.0, 2.0, 0.0);
  CHECK(twice.terms.size() < before);
  TestPoint p = sample_point(*cl, 7, 0.3);
  const Cx a = twice.eval(p.r, p.th, p.z);
  const Cx b = h.eval(p.r, p.th, p.z) * 2.0;
  CHECK(std::abs(a - b) < 1e-12 * std::max(1.0, std::abs(b)));
}

TEST_CASE("poly_norm dominates pointwise values on the real torus") {
  auto cl = kg_clustering(3);
  PolyHamiltonian h = sample_poly(*cl, 71, 1.0);
  const double bound = poly_norm(h, 0.0, 1.0, 2.0, 0.25, false);
  for (int q = 0; q < 8; ++q) {
    TestPoint p = sample_point(*cl, 200 + q, 0.0);
    p.r.setZero();
    CHECK(std::abs(h.eval(p.r, p.th, p.z)) <= bound * (1 + 1e-12));
  }
}

TEST_CASE("flow of the zero generator is the identity") {
  auto cl = kg_clustering(3);
  Jet S(2, *cl);
  FlowMap phi = build_flow(S, 1.0, 0.3, 0.5, 0.5, 1.0, 2.0, 0.25);
  TestPoint p = sample_point(*cl, 5, 0.2);
  Point x{p.r, p.th, p.z};
  Point y = transport(phi, x);
  CHECK((y.theta - x.theta).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((y.r - x.r).cwiseAbs().maxCoeff() < 1e-14);
  ModeVector dz = y.zeta;
  dz *= Cx(-1);
  dz += x.zeta;
  CHECK(dz.max_abs() < 1e-14);
}

TEST_CASE("flow group property: two half-time maps compose to time one") {
  auto cl = kg_clustering(3);
  Jet S = random_jet(2, *cl, 2, 1e-3, 81);
  FlowMap half = build_flow(S, 0.5, 0.3, 0.5, 0.5, 1.0, 2.0, 0.25);
  FlowMap full = build_flow(S, 1.0, 0.3, 0.5, 0.5, 1.0, 2.0, 0.25);
  TestPoint p = sample_point(*cl, 9, 0.2);
  Point x{p.r, p.th, p.z};
  Point y2 = transport(half, transport(half, x));
  Point y1 = transport(full, x);
  CHECK((y2.theta - y1.theta).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((y2.r - y1.r).cwiseAbs().maxCoeff() < 1e-9);
  ModeVector dz = y2.zeta;
  dz *= Cx(-1);
  dz += y1.zeta;
  CHECK(dz.max_abs() < 1e-9);
}

TEST_CASE("symplecticity defect of a generated flow is tiny") {
  auto cl = kg_clustering(3);
  Jet S = random_jet(2, *cl, 2, 1e-3, 91);
  FlowMap phi = build_flow(S, 1.0, 0.3, 0.5, 0.5, 1.0, 2.0, 0.25);
  Eigen::VectorXcd th(2);
  th << Cx(0.2, 0), Cx(1.4, 0);
  CHECK(symplecticity_defect(phi, th) < 1e-8);
}

TEST_CASE("pullback agrees with evaluation along the transported point") {
  auto cl = kg_clustering(3);
  PolyHamiltonian h = sample_poly(*cl, 101, 1.0);
  Jet S = random_jet(2, *cl, 2, 1e-4, 102);
  // S ~ 1e-4, so five Lie terms put the series error far below 1e-8; zero
  // drop tolerances would let the term count blow up combinatorially
  PolyHamiltonian hp = pullback(h, S, 5, 0.4, 1.0, 2.0, 0.25, 1e-14, 1e-16);
  FlowMap phi = build_flow(S, 1.0, 0.3, 0.5, 0.4, 1.0, 2.0, 0.25);
  for (int q = 0; q < 4; ++q) {
    TestPoint p = sample_point(*cl, 300 + q, 0.1);
    Point x{p.r, p.th, p.z};
    Point y = transport(phi, x);
    const Cx direct = h.eval(y.r, y.theta, y.zeta);
    const Cx series = hp.eval(p.r, p.th, p.z);
    CHECK(std::abs(series - direct) < 1e-8 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("build_flow rejects generators violating the smallness bound") {
  auto cl = kg_clustering(3);
  Jet S = random_jet(2, *cl, 2, 10.0, 111);
  CHECK_THROWS_AS(build_flow(S, 1.0, 1e-4, 1e-4, 0.5, 1.0, 2.0, 0.25),
                  std::runtime_error);
}
