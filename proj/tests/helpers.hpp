#pragma once
// shared fixtures: small KG clustering and seeded random structured objects
#include <memory>
#include <random>

#include "kamnf/blockmat.hpp"
#include "kamnf/modes.hpp"

namespace kamnf::testing {

inline SpectralModel kg_model(double m = 1.0, double delta = 0.5) {
  SpectralModel md;
  md.kind = ModelKind::KG_S2;
  md.m = m;
  md.delta = delta;
  md.n = 2;
  return md;
}

inline AdmissibleSet kg_admissible() {
  AdmissibleSet A;
  A.modes = {{1, 0}, {2, 1}};
  A.actions = {1.5, 1.5};
  return A;
}

// normal clustering of the KG model at W_max with the desk admissible set
// removed; held by shared_ptr so fixtures can outlive the factory call
inline std::shared_ptr<Clustering> kg_clustering(int W_max) {
  Clustering full = enumerate_modes(kg_model(), W_max);
  return std::make_shared<Clustering>(remove_admissible(full, kg_admissible()));
}

struct Rng {
  std::mt19937_64 g;
  explicit Rng(std::uint64_t seed) : g(seed) {}
  double u() { return 2.0 * (double(g()) / double(g.max())) - 1.0; }
  Cx cx() { return Cx(u(), u()); }
};

inline ModeVector random_mode_vector(const Clustering& cl, Rng& r,
                                     double decay = 1.0) {
  ModeVector z(cl);
  for (int a = 0; a < cl.n_clusters(); ++a) {
    const double sc = std::pow(cl.weight(a), -decay);
    for (int i = 0; i < z.v[a].size(); ++i) z.v[a][i] = r.cx() * sc;
  }
  return z;
}

inline BlockMatrix random_block_matrix(const Clustering& cl, Rng& r,
                                       double decay = 1.0,
                                       bool symmetric = true) {
  BlockMatrix M(cl, symmetric);
  for (int a = 0; a < cl.n_clusters(); ++a)
    for (int b = 0; b < cl.n_clusters(); ++b) {
      const double sc = std::pow(cl.weight(a) * cl.weight(b), -decay);
      Eigen::MatrixXcd B(2 * cl.levels[a].dim(), 2 * cl.levels[b].dim());
      for (int i = 0; i < B.rows(); ++i)
        for (int j = 0; j < B.cols(); ++j) B(i, j) = r.cx() * sc;
      M.blocks[{a, b}] = std::move(B);
    }
  if (symmetric) M.symmetrize();
  return M;
}

}  // namespace kamnf::testing
