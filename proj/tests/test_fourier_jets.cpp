#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kamnf/jets.hpp"

using namespace kamnf;
using namespace kamnf::testing;

TEST_CASE("majorant: hand-computed value") {
  FourierSeries<Cx> f;
  f.n = 2;
  f.add({0, 0, 0, 0}, Cx(2, 0));
  f.add({1, -1, 0, 0}, Cx(0, 3));
  // 2 + 3 e^{2 sigma}
  CHECK(f.majorant_amp(0.5) == doctest::Approx(2 + 3 * std::exp(1.0)));
  CHECK(f.majorant_amp(0.0) == doctest::Approx(5.0));
}

TEST_CASE("derivative multiplies by i k_i") {
  FourierSeries<Cx> f;
  f.n = 2;
  f.add({2, 1, 0, 0}, Cx(1, 1));
  FourierSeries<Cx> d0 = f.derivative(0);
  CHECK(*d0.find({2, 1, 0, 0}) == Cx(1, 1) * Cx(0, 2));
  CHECK(f.derivative(1).find({2, 1, 0, 0})->imag() == doctest::Approx(1.0));
  // theta-independent modes vanish
  FourierSeries<Cx> g;
  g.n = 2;
  g.add({0, 3, 0, 0}, Cx(1, 0));
  CHECK(g.derivative(0).c.empty());
}

TEST_CASE("conv matches the pointwise product") {
  FourierSeries<Cx> a, b;
  a.n = b.n = 2;
  a.add({1, 0, 0, 0}, Cx(0.3, 0.1));
  a.add({0, -1, 0, 0}, Cx(0.2, 0));
  b.add({0, 1, 0, 0}, Cx(1, -1));
  b.add({-1, 1, 0, 0}, Cx(0, 0.7));
  FourierSeries<Cx> p = conv(a, b, 10, 0.0);
  Eigen::VectorXcd th(2);
  th << Cx(0.4, 0), Cx(-1.1, 0);
  const Cx want = a.eval(th, Cx(0)) * b.eval(th, Cx(0));
  CHECK(std::abs(p.eval(th, Cx(0)) - want) < 1e-14);
}

TEST_CASE("conv tail charges the dropped majorant") {
  FourierSeries<Cx> a, b;
  a.n = b.n = 2;
  a.add({2, 0, 0, 0}, Cx(1, 0));
  b.add({2, 0, 0, 0}, Cx(1, 0));
  FourierSeries<Cx> p = conv(a, b, 3, 0.25);  // result k = (4,0) over the cap
  CHECK(p.c.empty());
  CHECK(p.tail == doctest::Approx(std::exp(0.25 * 4)));
}

TEST_CASE("symmetrize_real produces real torus values") {
  FourierSeries<Cx> f;
  f.n = 2;
  f.add({1, 0, 0, 0}, Cx(0.4, -0.3));
  f.add({0, 2, 0, 0}, Cx(-0.1, 0.9));
  f.symmetrize_real();
  Eigen::VectorXcd th(2);
  th << Cx(0.7, 0), Cx(2.1, 0);
  CHECK(std::abs(f.eval(th, Cx(0)).imag()) < 1e-15);
}

TEST_CASE("prune conserves the majorant at the pruning width") {
  FourierSeries<Cx> f;
  f.n = 2;
  f.add({1, 0, 0, 0}, Cx(1e-3, 0));
  f.add({3, 3, 0, 0}, Cx(0.5, 0));
  f.add({0, 1, 0, 0}, Cx(1e-12, 0));
  const double before = f.majorant_amp(0.3);
  f.prune(4, 1e-9, 0.3);
  CHECK(f.majorant_amp(0.3) + f.tail == doctest::Approx(before));
  CHECK(f.c.size() == 1);
}

TEST_CASE("jet evaluation matches the four components") {
  auto cl = kg_clustering(3);
  Rng r(31);
  Jet f = random_jet(2, *cl, 2, 0.1, 77);
  Eigen::VectorXcd th(2), rr(2);
  th << Cx(0.3, 0), Cx(-0.8, 0);
  rr << Cx(0.05, 0), Cx(-0.02, 0);
  ModeVector z = random_mode_vector(*cl, r);
  z *= Cx(0.1);
  Cx manual = f.ftheta.eval(th, Cx(0));
  manual += f.grad_r(th).cwiseProduct(rr).sum();
  manual += f.fzeta.eval(th, ModeVector(*cl)).dot(z);
  BlockMatrix M(*cl, true);
  M = f.fzz.eval(th, M);
  manual += 0.5 * apply(M, z).dot(z);
  CHECK(std::abs(f.eval(rr, th, z) - manual) < 1e-13);
}

TEST_CASE("poisson_jet agrees with the pointwise bracket") {
  auto cl = kg_clustering(3);
  Jet f = random_jet(2, *cl, 2, 0.3, 5);
  Jet g = random_jet(2, *cl, 2, 0.3, 6);
  Jet pb = poisson_jet(f, g, 16, 0.0);
  CHECK(pb.tail_total() == 0);  // K_cap generous: bracket kept exactly

  Rng r(8);
  Eigen::VectorXcd th(2), rr(2);
  th << Cx(1.1, 0), Cx(-0.4, 0);
  rr << Cx(0.07, 0), Cx(0.02, 0);
  ModeVector z = random_mode_vector(*cl, r);
  z *= Cx(0.2);

  // {f,g} = <grad_r f, grad_th g> - <grad_r g, grad_th f>
  //         + <J grad_z f, grad_z g>
  Cx want = f.grad_r(th).cwiseProduct(g.grad_theta(rr, th, z)).sum();
  want -= g.grad_r(th).cwiseProduct(f.grad_theta(rr, th, z)).sum();
  want += f.grad_zeta(th, z).applied_J().dot(g.grad_zeta(th, z));
  CHECK(std::abs(pb.eval(rr, th, z) - want) <
        1e-12 * std::max(1.0, std::abs(want)));
}

TEST_CASE("poisson_jet is antisymmetric") {
  auto cl = kg_clustering(3);
  Jet f = random_jet(2, *cl, 2, 0.3, 15);
  Jet g = random_jet(2, *cl, 2, 0.3, 16);
  Jet a = poisson_jet(f, g, 16, 0.0);
  Jet b = poisson_jet(g, f, 16, 0.0);
  a += b;
  CHECK(a.is_zero(1e-12));
}

TEST_CASE("jet norm: scaling, monotonicity, plus dominates") {
  auto cl = kg_clustering(4);
  Jet f = random_jet(2, *cl, 3, 1.0, 23);
  const double n1 = jet_norm(f, 0.5, 1.0, 2.0, 0.25, false);
  Jet g = f;
  g *= Cx(0.25);
  CHECK(jet_norm(g, 0.5, 1.0, 2.0, 0.25, false) ==
        doctest::Approx(0.25 * n1));
  CHECK(jet_norm(f, 0.9, 1.0, 2.0, 0.25, false) >= n1);
  CHECK(jet_norm(f, 0.5, 1.0, 2.0, 0.25, true) >= n1);
}

TEST_CASE("jet json fixture round-trips") {
  auto cl = kg_clustering(3);
  Jet f = random_jet(2, *cl, 2, 0.5, 99);
  Jet g = jet_from_json(jet_to_json(f, 8), *cl);
  g *= Cx(-1);
  g += f;
  CHECK(g.is_zero(1e-15));
}

TEST_CASE("random_jet is deterministic in the seed") {
  auto cl = kg_clustering(3);
  Jet a = random_jet(2, *cl, 2, 0.5, 4);
  Jet b = random_jet(2, *cl, 2, 0.5, 4);
  b *= Cx(-1);
  b += a;
  CHECK(b.is_zero(0.0));
  Jet c = random_jet(2, *cl, 2, 0.5, 5);
  c *= Cx(-1);
  c += a;
  CHECK_FALSE(c.is_zero(1e-6));
}
