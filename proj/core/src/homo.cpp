#include "kamnf/homo.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace kamnf {

namespace {

double kw(const KIdx& k, const Eigen::VectorXd& omega) {
  double acc = 0;
  for (int i = 0; i < omega.size(); ++i) acc += k[i] * omega[i];
  return acc;
}

// coefficient (covector) transform between real and complex cells:
// <s, z> = <U^T s, c> for z = U c
Eigen::VectorXcd form_to_complex(const Eigen::VectorXcd& z) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::VectorXcd o(z.size());
  for (int i = 0; i + 1 < z.size(); i += 2) {
    // U^T = r [[1, -i], [1, i]]
    o[i] = r * (z[i] - Cx(0, 1) * z[i + 1]);
    o[i + 1] = r * (z[i] + Cx(0, 1) * z[i + 1]);
  }
  return o;
}
Eigen::VectorXcd form_from_complex(const Eigen::VectorXcd& c) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::VectorXcd o(c.size());
  for (int i = 0; i + 1 < c.size(); i += 2) {
    // conj(U) = r [[1, 1], [i, -i]]
    o[i] = r * (c[i] + c[i + 1]);
    o[i + 1] = r * Cx(0, 1) * (c[i] - c[i + 1]);
  }
  return o;
}

// superblock split of an interleaved (xi,eta) complex block
struct Super {
  Eigen::MatrixXcd xx, xe, ex, ee;
};
Super split_super(const Eigen::MatrixXcd& M) {
  const int da = int(M.rows()) / 2, db = int(M.cols()) / 2;
  Super s;
  s.xx.resize(da, db);
  s.xe.resize(da, db);
  s.ex.resize(da, db);
  s.ee.resize(da, db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < db; ++j) {
      s.xx(i, j) = M(2 * i, 2 * j);
      s.xe(i, j) = M(2 * i, 2 * j + 1);
      s.ex(i, j) = M(2 * i + 1, 2 * j);
      s.ee(i, j) = M(2 * i + 1, 2 * j + 1);
    }
  return s;
}
Eigen::MatrixXcd join_super(const Super& s) {
  const int da = int(s.xx.rows()), db = int(s.xx.cols());
  Eigen::MatrixXcd M(2 * da, 2 * db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < db; ++j) {
      M(2 * i, 2 * j) = s.xx(i, j);
      M(2 * i, 2 * j + 1) = s.xe(i, j);
      M(2 * i + 1, 2 * j) = s.ex(i, j);
      M(2 * i + 1, 2 * j + 1) = s.ee(i, j);
    }
  return M;
}

struct ClusterFrame {
  Eigen::VectorXd alpha;  // eigenvalues of Q_[a], ascending
  Eigen::MatrixXcd P;     // unitary frame
};

std::vector<ClusterFrame> build_frames(const NormalFormHam& h,
                                       const Clustering& cl) {
  BlockMatrix Q = q_of(h.A);
  std::vector<ClusterFrame> out(cl.n_clusters());
  for (int a = 0; a < cl.n_clusters(); ++a) {
    const int d = cl.levels[a].dim();
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(d, d);
    if (const auto* blk = Q.find(a, a)) q = *blk;
    EigResult e = hermitian_eig(q);
    out[a] = {e.values, e.vectors};
  }
  return out;
}

}  // namespace

DivisorAudit& DivisorAudit::merge(const DivisorAudit& o) {
  for (int i = 0; i < 4; ++i) {
    if (o.fam[i].min_div < fam[i].min_div) {
      fam[i].min_div = o.fam[i].min_div;
      fam[i].k = o.fam[i].k;
      fam[i].a = o.fam[i].a;
      fam[i].b = o.fam[i].b;
    }
    fam[i].excluded = fam[i].excluded || o.fam[i].excluded;
  }
  return *this;
}

std::string DivisorAudit::to_json() const {
  nlohmann::json j;
  const char* names[4] = {"frequency", "linear", "double_sum",
                          "double_difference"};
  for (int i = 0; i < 4; ++i) {
    nlohmann::json f;
    f["min_divisor"] = fam[i].min_div;
    f["k"] = {fam[i].k[0], fam[i].k[1], fam[i].k[2], fam[i].k[3]};
    f["a"] = fam[i].a;
    f["b"] = fam[i].b;
    f["excluded"] = fam[i].excluded;
    j[names[i]] = std::move(f);
  }
  return j.dump(2);
}

ScalarSolution solve_scalar(const FourierSeries<Cx>& psi,
                            const Eigen::VectorXd& omega, double kappa, int N,
                            double sigma, double sigma_p) {
  ScalarSolution out;
  out.phi.n = out.R.n = psi.n;
  for (const auto& [k, c] : psi.c) {
    if (l1(k) == 0) continue;  // mean must have been removed by the caller
    if (l1(k) > N) {
      out.R.add(k, c);
      continue;
    }
    const double d = kw(k, omega);
    out.audit.fam[0].observe(std::abs(d), k, -1, -1, kappa);
    if (d == 0.0) throw std::runtime_error("solve_scalar: exact zero divisor");
    out.phi.add(k, Cx(0, -1) * c / d);
  }
  (void)sigma;
  (void)sigma_p;
  return out;
}

LinearSolution solve_linear(const FourierSeries<ModeVector>& F,
                            const NormalFormHam& h, const Clustering& cl,
                            double kappa, int N, double sigma, double sigma_p) {
  (void)sigma;
  (void)sigma_p;
  LinearSolution out;
  out.S.n = out.R.n = F.n;
  const auto frames = build_frames(h, cl);
  for (const auto& [k, fv] : F.c) {
    if (l1(k) > N) {
      out.R.add(k, fv);
      continue;
    }
    const double d0 = kw(k, h.omega);
    ModeVector sv(cl);
    for (int a = 0; a < cl.n_clusters(); ++a) {
      if (fv.v[a].size() == 0 || fv.v[a].isZero(0)) continue;
      const auto& fr = frames[a];
      const double wa = cl.weight(a);
      Eigen::VectorXcd fc = form_to_complex(fv.v[a]);
      const int d = cl.levels[a].dim();
      Eigen::VectorXcd fxi(d), feta(d);
      for (int i = 0; i < d; ++i) {
        fxi[i] = fc[2 * i];
        feta[i] = fc[2 * i + 1];
      }
      for (int i = 0; i < d; ++i) {
        out.audit.fam[1].observe(std::abs(d0 + fr.alpha[i]) / wa, k, a, -1,
                                 kappa);
        out.audit.fam[1].observe(std::abs(d0 - fr.alpha[i]) / wa, k, a, -1,
                                 kappa);
      }
      // s_xi = i (d0 + Q)^-1 f_xi ; s_eta = i (d0 - Q^T)^-1 f_eta
      Eigen::VectorXcd y = fr.P.adjoint() * fxi;
      for (int i = 0; i < d; ++i) y[i] /= (d0 + fr.alpha[i]);
      Eigen::VectorXcd sxi = Cx(0, 1) * (fr.P * y);
      y = fr.P.transpose() * feta;
      for (int i = 0; i < d; ++i) y[i] /= (d0 - fr.alpha[i]);
      Eigen::VectorXcd seta = Cx(0, 1) * (fr.P.conjugate() * y);
      Eigen::VectorXcd sc(2 * d);
      for (int i = 0; i < d; ++i) {
        sc[2 * i] = sxi[i];
        sc[2 * i + 1] = seta[i];
      }
      sv.v[a] = form_from_complex(sc);
    }
    out.S.add(k, std::move(sv));
  }
  out.S.symmetrize_real();
  return out;
}

QuadraticSolution solve_quadratic(const FourierSeries<BlockMatrix>& F,
                                  const NormalFormHam& h, const Clustering& cl,
                                  double kappa, int N, double sigma,
                                  double sigma_p) {
  (void)sigma;
  (void)sigma_p;
  QuadraticSolution out;
  out.S.n = out.R.n = F.n;
  out.B = BlockMatrix(cl, true);
  const auto frames = build_frames(h, cl);
  for (const auto& [k, fm] : F.c) {
    if (l1(k) > N) {
      out.R.add(k, fm);
      continue;
    }
    const double d0 = kw(k, h.omega);
    const bool k0 = (l1(k) == 0);
    BlockMatrix sm(cl, true);
    for (const auto& [ab, blk] : fm.blocks) {
      const int a = ab.first, b = ab.second;
      if (a > b) continue;  // mirrored by symmetry
      const auto& fa = frames[a];
      const auto& fb = frames[b];
      const double wa = cl.weight(a), wb = cl.weight(b);
      const int da = cl.levels[a].dim(), db = cl.levels[b].dim();
      BlockMatrix cfm(cl, false);
      cfm.blocks[{a, b}] = blk;
      Super f = split_super(to_complex(cfm).blocks.at({a, b}));

      for (int i = 0; i < da; ++i)
        for (int j = 0; j < db; ++j) {
          out.audit.fam[2].observe(
              std::abs(d0 + fa.alpha[i] + fb.alpha[j]) / (wa + wb), k, a, b,
              kappa);
          out.audit.fam[2].observe(
              std::abs(d0 - fa.alpha[i] - fb.alpha[j]) / (wa + wb), k, a, b,
              kappa);
          if (!(k0 && a == b))
            out.audit.fam[3].observe(
                std::abs(d0 + fa.alpha[i] - fb.alpha[j]) /
                    (1.0 + std::abs(wa - wb)),
                k, a, b, kappa);
        }

      Super x;
      // xi-xi: (d0 + Q_a) X + X Q_b^T = i F
      {
        Eigen::MatrixXcd Y = fa.P.adjoint() * (Cx(0, 1) * f.xx) *
                             fb.P.conjugate();
        for (int i = 0; i < da; ++i)
          for (int j = 0; j < db; ++j)
            Y(i, j) /= (d0 + fa.alpha[i] + fb.alpha[j]);
        x.xx = fa.P * Y * fb.P.transpose();
      }
      // eta-eta: (d0 - Q_a^T) X - X Q_b = i F
      {
        Eigen::MatrixXcd Y = fa.P.transpose() * (Cx(0, 1) * f.ee) * fb.P;
        for (int i = 0; i < da; ++i)
          for (int j = 0; j < db; ++j)
            Y(i, j) /= (d0 - fa.alpha[i] - fb.alpha[j]);
        x.ee = fa.P.conjugate() * Y * fb.P.adjoint();
      }
      if (k0 && a == b) {
        // normal-form correction absorbs the resonant superblocks
        x.xe = Eigen::MatrixXcd::Zero(da, db);
        x.ex = Eigen::MatrixXcd::Zero(da, db);
        Super bsup;
        bsup.xx = Eigen::MatrixXcd::Zero(da, db);
        bsup.ee = Eigen::MatrixXcd::Zero(da, db);
        bsup.xe = f.xe;
        bsup.ex = f.ex;
        BlockMatrix cb(cl, false);
        cb.blocks[{a, b}] = join_super(bsup);
        BlockMatrix rb = from_complex(cb);
        out.B.add_block(a, b, rb.blocks.at({a, b}));
      } else {
        // xi-eta: (d0 + Q_a) X - X Q_b = i F
        {
          Eigen::MatrixXcd Y = fa.P.adjoint() * (Cx(0, 1) * f.xe) * fb.P;
          for (int i = 0; i < da; ++i)
            for (int j = 0; j < db; ++j)
              Y(i, j) /= (d0 + fa.alpha[i] - fb.alpha[j]);
          x.xe = fa.P * Y * fb.P.adjoint();
        }
        // eta-xi: (d0 - Q_a^T) X + X Q_b^T = i F
        {
          Eigen::MatrixXcd Y = fa.P.transpose() * (Cx(0, 1) * f.ex) *
                               fb.P.conjugate();
          for (int i = 0; i < da; ++i)
            for (int j = 0; j < db; ++j)
              Y(i, j) /= (d0 - fa.alpha[i] + fb.alpha[j]);
          x.ex = fa.P.conjugate() * Y * fb.P.transpose();
        }
      }
      BlockMatrix cx(cl, false);
      cx.blocks[{a, b}] = join_super(x);
      BlockMatrix rx = from_complex(cx);
      const Eigen::MatrixXcd& xr = rx.blocks.at({a, b});
      sm.blocks[{a, b}] = xr;
      if (a != b) sm.blocks[{b, a}] = xr.transpose();
    }
    if (!sm.blocks.empty() || !k0) out.S.add(k, std::move(sm));
  }
  out.S.symmetrize_real();
  return out;
}

HomoSolution solve_homological(const Jet& f, const NormalFormHam& h,
                               double kappa, int N, double sigma,
                               double sigma_p) {
  const Clustering& cl = *f.cl;
  HomoSolution sol;
  sol.S = Jet(f.n, cl);
  sol.R = Jet(f.n, cl);
  const KIdx k0{0, 0, 0, 0};

  // means
  sol.c = 0;
  if (const Cx* m = f.ftheta.find(k0)) sol.c = *m;
  sol.chi = Eigen::VectorXcd::Zero(f.n);
  if (const auto* m = f.fr.find(k0)) sol.chi = *m;

  // scalar part: <omega, d_theta S_theta> = -(f_theta - c)
  FourierSeries<Cx> psi = f.ftheta;
  psi.c.erase(k0);
  psi *= Cx(-1);
  ScalarSolution st = solve_scalar(psi, h.omega, kappa, N, sigma, sigma_p);
  sol.S.ftheta = std::move(st.phi);
  st.R *= Cx(-1);
  sol.R.ftheta = std::move(st.R);
  sol.audit.merge(st.audit);

  // r part, componentwise the same scalar solve
  for (int i = 0; i < f.n; ++i) {
    FourierSeries<Cx> ps;
    ps.n = f.n;
    for (const auto& [k, v] : f.fr.c) {
      if (l1(k) == 0) continue;
      if (v[i] != Cx(0)) ps.add(k, -v[i]);
    }
    ScalarSolution si = solve_scalar(ps, h.omega, kappa, N, sigma, sigma_p);
    for (const auto& [k, c] : si.phi.c) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(f.n);
      v[i] = c;
      sol.S.fr.add(k, std::move(v));
    }
    for (const auto& [k, c] : si.R.c) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(f.n);
      v[i] = -c;
      sol.R.fr.add(k, std::move(v));
    }
    sol.audit.merge(si.audit);
  }

  LinearSolution lz = solve_linear(f.fzeta, h, cl, kappa, N, sigma, sigma_p);
  sol.S.fzeta = std::move(lz.S);
  sol.R.fzeta = std::move(lz.R);
  sol.audit.merge(lz.audit);

  QuadraticSolution qz =
      solve_quadratic(f.fzz, h, cl, kappa, N, sigma, sigma_p);
  sol.S.fzz = std::move(qz.S);
  sol.B = std::move(qz.B);
  sol.R.fzz = std::move(qz.R);
  sol.audit.merge(qz.audit);

  sol.S.symmetrize_real();
  return sol;
}

double homological_residual(const Jet& f, const NormalFormHam& h,
                            const HomoSolution& sol, int K_cap,
                            double sigma_p) {
  const Clustering& cl = *f.cl;
  Jet hj(f.n, cl);
  const KIdx k0{0, 0, 0, 0};
  hj.fr.add(k0, h.omega.cast<Cx>());
  hj.fzz.add(k0, h.A);
  Jet res = poisson_jet(hj, sol.S, K_cap, sigma_p);
  res += f;
  Jet hhat(f.n, cl);
  if (sol.c != Cx(0)) hhat.ftheta.add(k0, sol.c);
  if (sol.chi.size()) hhat.fr.add(k0, sol.chi);
  if (!sol.B.blocks.empty()) hhat.fzz.add(k0, sol.B);
  hhat *= Cx(-1);
  res += hhat;
  Jet rneg = sol.R;
  rneg *= Cx(-1);
  res += rneg;
  double m = res.ftheta.majorant_amp(sigma_p);
  m = std::max(m, res.fr.majorant(sigma_p, [](const Eigen::VectorXcd& x) {
    return x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  }));
  m = std::max(m, res.fzeta.majorant(
                      sigma_p, [](const ModeVector& x) { return x.max_abs(); }));
  m = std::max(m, res.fzz.majorant(sigma_p, [](const BlockMatrix& x) {
    return x.max_abs();
  }));
  return m;
}

}  // namespace kamnf
