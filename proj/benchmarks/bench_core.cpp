#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "kamnf/blockmat.hpp"
#include "kamnf/jets.hpp"
#include "kamnf/modes.hpp"

using namespace kamnf;

namespace {

std::shared_ptr<Clustering> make_cl(int W_max) {
  SpectralModel md;
  md.kind = ModelKind::KG_S2;
  md.m = 1.0;
  md.delta = 0.5;
  md.n = 2;
  AdmissibleSet A;
  A.modes = {{1, 0}, {2, 1}};
  A.actions = {1.5, 1.5};
  return std::make_shared<Clustering>(
      remove_admissible(enumerate_modes(md, W_max), A));
}

BlockMatrix rand_mat(const Clustering& cl, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  auto u = [&] { return 2.0 * (double(g()) / double(g.max())) - 1.0; };
  BlockMatrix M(cl, true);
  for (int a = 0; a < cl.n_clusters(); ++a)
    for (int b = 0; b < cl.n_clusters(); ++b) {
      const double sc = std::pow(cl.weight(a) * cl.weight(b), -1.0);
      Eigen::MatrixXcd B(2 * cl.levels[a].dim(), 2 * cl.levels[b].dim());
      for (int i = 0; i < B.rows(); ++i)
        for (int j = 0; j < B.cols(); ++j) B(i, j) = Cx(u(), u()) * sc;
      M.blocks[{a, b}] = std::move(B);
    }
  M.symmetrize();
  return M;
}

void bm_norm_beta(benchmark::State& st) {
  auto cl = make_cl(int(st.range(0)));
  BlockMatrix A = rand_mat(*cl, 1);
  for (auto _ : st) benchmark::DoNotOptimize(norm_beta(A, 0.25));
}
BENCHMARK(bm_norm_beta)->Arg(8)->Arg(16)->Arg(24);

void bm_mul(benchmark::State& st) {
  auto cl = make_cl(int(st.range(0)));
  BlockMatrix A = rand_mat(*cl, 1), B = rand_mat(*cl, 2);
  for (auto _ : st) benchmark::DoNotOptimize(mul(A, B));
}
BENCHMARK(bm_mul)->Arg(8)->Arg(16);

void bm_poisson_jet(benchmark::State& st) {
  auto cl = make_cl(int(st.range(0)));
  Jet f = random_jet(2, *cl, 4, 1.0, 3);
  Jet g = random_jet(2, *cl, 4, 1.0, 4);
  for (auto _ : st) benchmark::DoNotOptimize(poisson_jet(f, g, 12, 0.5));
}
BENCHMARK(bm_poisson_jet)->Arg(6)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
