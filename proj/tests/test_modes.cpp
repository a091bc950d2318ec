#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kamnf/modes.hpp"

using namespace kamnf;
using namespace kamnf::testing;

TEST_CASE("sphere enumeration: level w holds 2w+1 modes") {
  Clustering cl = enumerate_modes(kg_model(), 6);
  REQUIRE(cl.n_clusters() == 6);
  int total = 0;
  for (int a = 0; a < 6; ++a) {
    CHECK(cl.levels[a].w == a + 1);
    CHECK(cl.levels[a].dim() == 2 * (a + 1) + 1);
    total += cl.levels[a].dim();
  }
  CHECK(cl.total_modes() == total);
}

TEST_CASE("oscillator enumeration: level j holds j modes") {
  SpectralModel md;
  md.kind = ModelKind::QHO_R2;
  Clustering cl = enumerate_modes(md, 5);
  for (int a = 0; a < 5; ++a) CHECK(cl.levels[a].dim() == a + 1);
}

TEST_CASE("remove_admissible drops exactly the tangential modes") {
  Clustering full = enumerate_modes(kg_model(), 6);
  Clustering cl = remove_admissible(full, kg_admissible());
  CHECK(cl.total_modes() == full.total_modes() - 2);
  CHECK(cl.levels[0].dim() == 2);  // (1,0) removed from w = 1
  CHECK(cl.levels[1].dim() == 4);  // (2,1) removed from w = 2
}

TEST_CASE("eigenvalues: sphere sqrt(j(j+1)+m), oscillator j") {
  CHECK(eigenvalue(kg_model(1.0), {2, 0}) == doctest::Approx(std::sqrt(7.0)));
  CHECK(eigenvalue(kg_model(0.1), {1, -1}) ==
        doctest::Approx(std::sqrt(2.1)));
  SpectralModel md;
  md.kind = ModelKind::QHO_R2;
  CHECK(eigenvalue(md, {4, 2}) == doctest::Approx(4.0));
}

TEST_CASE("tangential frequencies carry the parameter") {
  AdmissibleSet A = kg_admissible();
  Eigen::VectorXd rho(2);
  rho << 1.2, 1.7;
  Eigen::VectorXd om = omega0(kg_model(1.0, 0.5), A, rho);
  CHECK(om[0] == doctest::Approx(std::sqrt(2.0 + 1.0 + 0.5 * 1.2)));
  CHECK(om[1] == doctest::Approx(std::sqrt(6.0 + 1.0 + 0.5 * 1.7)));
}

TEST_CASE("sphere gap bounds (asymptotic separation)") {
  // |lambda_a - lambda_b| >= |w_a - w_b| / 2 and, with w_b the smaller
  // weight, |lambda_a - lambda_b - (w_a - w_b)| <= (m + 1) / w_b
  for (double m : {0.1, 1.0, 10.0}) {
    SpectralModel md = kg_model(m);
    for (int wa = 1; wa <= 60; ++wa)
      for (int wb = 1; wb < wa; ++wb) {
        const double la = eigenvalue(md, {wa, 0});
        const double lb = eigenvalue(md, {wb, 0});
        CHECK(std::abs(la - lb) >= 0.5 * std::abs(wa - wb));
        CHECK(std::abs(la - lb - (wa - wb)) <= (m + 1.0) / wb);
      }
  }
}

TEST_CASE("growth/separation hypothesis holds for the sphere") {
  A1Report r = check_A1(kg_model(1.0), 30);
  CHECK(r.pass(0.5));
}

TEST_CASE("model file json round-trip") {
  ModelFile mf;
  mf.model = kg_model(1.0, 0.5);
  mf.W_max = 8;
  mf.A = kg_admissible();
  ModelFile back = parse_model(model_to_json(mf));
  CHECK(back.W_max == 8);
  CHECK(back.model.m == doctest::Approx(1.0));
  CHECK(back.A.modes == mf.A.modes);
}

TEST_CASE("malformed model text is rejected") {
  CHECK_THROWS(parse_model("{\"kind\": \"bogus\"}"));
  CHECK_THROWS(parse_model("not json"));
}

TEST_CASE("exclusion sampling is deterministic and monotone in kappa") {
  SpectralModel md = kg_model();
  AdmissibleSet A = kg_admissible();
  ExclusionReport r1 = sample_melnikov(md, A, 6, 1e-2, 3, 512, 17);
  ExclusionReport r2 = sample_melnikov(md, A, 6, 1e-2, 3, 512, 17);
  CHECK(r1.fraction == r2.fraction);
  ExclusionReport r3 = sample_melnikov(md, A, 6, 1e-3, 3, 512, 17);
  CHECK(r3.fraction <= r1.fraction);
}

TEST_CASE("cluster bookkeeping: weight floor and flat indexing") {
  auto cl = kg_clustering(4);
  CHECK(cl->weight(0) == 1.0);
  int pos = 0;
  for (const auto& lvl : cl->levels)
    for (const auto& md : lvl.modes) CHECK(cl->flat_index(md) == pos++);
}
