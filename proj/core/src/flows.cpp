#include "kamnf/flows.hpp"

#include <cmath>
#include <stdexcept>

namespace kamnf {

int flat_dim(const Clustering& cl) { return 2 * cl.total_modes(); }

Eigen::VectorXcd to_flat(const ModeVector& z) {
  int dim = 0;
  for (const auto& p : z.v) dim += int(p.size());
  Eigen::VectorXcd out(dim);
  int at = 0;
  for (const auto& p : z.v) {
    out.segment(at, p.size()) = p;
    at += int(p.size());
  }
  return out;
}

ModeVector from_flat(const Clustering& cl, const Eigen::VectorXcd& v) {
  ModeVector out(cl);
  int at = 0;
  for (int i = 0; i < cl.n_clusters(); ++i) {
    const int len = 2 * cl.levels[i].dim();
    out.v[i] = v.segment(at, len);
    at += len;
  }
  return out;
}

Eigen::MatrixXcd to_dense(const BlockMatrix& A) {
  const Clustering& cl = *A.cl;
  const int dim = flat_dim(cl);
  std::vector<int> off(cl.n_clusters() + 1, 0);
  for (int i = 0; i < cl.n_clusters(); ++i)
    off[i + 1] = off[i] + 2 * cl.levels[i].dim();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& [k, blk] : A.blocks)
    out.block(off[k.first], off[k.second], blk.rows(), blk.cols()) = blk;
  return out;
}

namespace {

// y = J x in the flat interleaved representation: (p,q) -> (-q, p)
Eigen::VectorXcd J_flat(const Eigen::VectorXcd& x) {
  Eigen::VectorXcd y(x.size());
  for (int i = 0; i + 1 < x.size(); i += 2) {
    y[i] = -x[i + 1];
    y[i + 1] = x[i];
  }
  return y;
}
Eigen::MatrixXcd J_flat(const Eigen::MatrixXcd& M) {
  Eigen::MatrixXcd y(M.rows(), M.cols());
  for (int i = 0; i + 1 < M.rows(); i += 2) {
    y.row(i) = -M.row(i + 1);
    y.row(i + 1) = M.row(i);
  }
  return y;
}

// dense snapshot of the generator's coefficients
struct GenCache {
  int n = 2;
  int dim = 0;
  struct Item {
    KIdx k;
    Cx th = 0;                 // ftheta coefficient
    Eigen::VectorXcd r;        // fr coefficient (n)
    Eigen::VectorXcd z;        // fzeta coefficient (flat, may be empty)
    Eigen::MatrixXcd zz;       // fzz coefficient (dense, may be empty)
    bool has_z = false, has_zz = false;
  };
  std::vector<Item> items;

  explicit GenCache(const Jet& g, const Clustering& cl) {
    n = g.n;
    dim = flat_dim(cl);
    std::map<KIdx, Item> m;
    auto slot = [&](const KIdx& k) -> Item& {
      auto it = m.find(k);
      if (it == m.end()) {
        Item v;
        v.k = k;
        v.r = Eigen::VectorXcd::Zero(n);
        it = m.emplace(k, std::move(v)).first;
      }
      return it->second;
    };
    for (const auto& [k, c] : g.ftheta.c) slot(k).th = c;
    for (const auto& [k, c] : g.fr.c) slot(k).r = c;
    for (const auto& [k, c] : g.fzeta.c) {
      auto& s = slot(k);
      s.z = to_flat(c);
      s.has_z = true;
    }
    for (const auto& [k, c] : g.fzz.c) {
      auto& s = slot(k);
      s.zz = to_dense(c);
      s.has_zz = true;
    }
    for (auto& [k, v] : m) items.push_back(std::move(v));
  }

  Cx phase(const Item& it, const Eigen::VectorXcd& theta) const {
    Cx e = 0;
    for (int i = 0; i < n; ++i) e += Cx(it.k[i]) * theta[i];
    return std::exp(Cx(0, 1) * e);
  }
};

struct FullState {
  Eigen::VectorXcd r, theta, zeta;
};

FullState deriv(const GenCache& gc, const FullState& x) {
  const int n = gc.n;
  FullState d;
  d.r = Eigen::VectorXcd::Zero(n);
  d.theta = Eigen::VectorXcd::Zero(n);
  d.zeta = Eigen::VectorXcd::Zero(gc.dim);
  Eigen::VectorXcd gz = Eigen::VectorXcd::Zero(gc.dim);  // grad_zeta
  for (const auto& it : gc.items) {
    const Cx p = gc.phase(it, x.theta);
    d.theta += p * it.r;
    Cx val = it.th;
    for (int i = 0; i < n; ++i) val += it.r[i] * x.r[i];
    if (it.has_z) {
      gz += p * it.z;
      val += it.z.cwiseProduct(x.zeta).sum();
    }
    if (it.has_zz) {
      Eigen::VectorXcd mz = it.zz * x.zeta;
      gz += p * mz;
      val += 0.5 * x.zeta.cwiseProduct(mz).sum();
    }
    for (int i = 0; i < n; ++i)
      d.r[i] -= Cx(0, it.k[i]) * p * val;  // -grad_theta
  }
  d.zeta = J_flat(gz);
  return d;
}

FullState axpy(const FullState& a, double h, const FullState& b) {
  return {a.r + h * b.r, a.theta + h * b.theta, a.zeta + h * b.zeta};
}

FullState rk4_full(const GenCache& gc, FullState x, double t, int steps) {
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    FullState k1 = deriv(gc, x);
    FullState k2 = deriv(gc, axpy(x, h / 2, k1));
    FullState k3 = deriv(gc, axpy(x, h / 2, k2));
    FullState k4 = deriv(gc, axpy(x, h, k3));
    x.r += (h / 6) * (k1.r + 2 * k2.r + 2 * k3.r + k4.r);
    x.theta += (h / 6) * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
    x.zeta += (h / 6) * (k1.zeta + 2 * k2.zeta + 2 * k3.zeta + k4.zeta);
  }
  return x;
}

}  // namespace

Eigen::VectorXcd FlowMap::K_of(const Eigen::VectorXcd& theta) const {
  GenCache gc(gen, *cl);
  FullState x{Eigen::VectorXcd::Zero(n), theta,
              Eigen::VectorXcd::Zero(gc.dim)};
  return rk4_full(gc, x, t, steps).theta;
}

ModeVector FlowMap::T_of(const Eigen::VectorXcd& theta) const {
  GenCache gc(gen, *cl);
  FullState x{Eigen::VectorXcd::Zero(n), theta,
              Eigen::VectorXcd::Zero(gc.dim)};
  return from_flat(*cl, rk4_full(gc, x, t, steps).zeta);
}

Eigen::VectorXcd FlowMap::L_of(const Eigen::VectorXcd& theta,
                               const ModeVector& zeta) const {
  GenCache gc(gen, *cl);
  FullState x{Eigen::VectorXcd::Zero(n), theta, to_flat(zeta)};
  return rk4_full(gc, x, t, steps).r;
}

Eigen::MatrixXcd FlowMap::U_of(const Eigen::VectorXcd& theta) const {
  GenCache gc(gen, *cl);
  const int dim = gc.dim;
  // theta path + U' = J Szz(theta) U, and the affine part a for completeness
  Eigen::VectorXcd th = theta;
  Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(dim, dim);
  const double h = t / steps;
  auto szz = [&](const Eigen::VectorXcd& tv) {
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& it : gc.items)
      if (it.has_zz) M += gc.phase(it, tv) * it.zz;
    return M;
  };
  auto sr = [&](const Eigen::VectorXcd& tv) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    for (const auto& it : gc.items) v += gc.phase(it, tv) * it.r;
    return v;
  };
  for (int s = 0; s < steps; ++s) {
    // RK4 on (theta, U)
    Eigen::VectorXcd t1 = sr(th);
    Eigen::MatrixXcd u1 = J_flat(Eigen::MatrixXcd(szz(th) * U));
    Eigen::VectorXcd t2 = sr(th + (h / 2) * t1);
    Eigen::MatrixXcd u2 =
        J_flat(Eigen::MatrixXcd(szz(th + (h / 2) * t1) * (U + (h / 2) * u1)));
    Eigen::VectorXcd t3 = sr(th + (h / 2) * t2);
    Eigen::MatrixXcd u3 =
        J_flat(Eigen::MatrixXcd(szz(th + (h / 2) * t2) * (U + (h / 2) * u2)));
    Eigen::VectorXcd t4 = sr(th + h * t3);
    Eigen::MatrixXcd u4 =
        J_flat(Eigen::MatrixXcd(szz(th + h * t3) * (U + h * u3)));
    th += (h / 6) * (t1 + 2 * t2 + 2 * t3 + t4);
    U += (h / 6) * (u1 + 2 * u2 + 2 * u3 + u4);
  }
  return U;
}

Eigen::MatrixXcd FlowMap::S_of(const Eigen::VectorXcd& theta) const {
  GenCache gc(gen, *cl);
  Eigen::VectorXcd th = theta;
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Identity(n, n);
  const double h = t / steps;
  auto sr = [&](const Eigen::VectorXcd& tv) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    for (const auto& it : gc.items) v += gc.phase(it, tv) * it.r;
    return v;
  };
  // P_(ij) = d/dtheta_i fr_j ; Lambda' = -P Lambda
  auto pmat = [&](const Eigen::VectorXcd& tv) {
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& it : gc.items) {
      const Cx p = gc.phase(it, tv);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P(i, j) += Cx(0, it.k[i]) * p * it.r[j];
    }
    return P;
  };
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXcd t1 = sr(th);
    Eigen::MatrixXcd l1 = -pmat(th) * L;
    Eigen::VectorXcd t2 = sr(th + (h / 2) * t1);
    Eigen::MatrixXcd l2 = -pmat(th + (h / 2) * t1) * (L + (h / 2) * l1);
    Eigen::VectorXcd t3 = sr(th + (h / 2) * t2);
    Eigen::MatrixXcd l3 = -pmat(th + (h / 2) * t2) * (L + (h / 2) * l2);
    Eigen::VectorXcd t4 = sr(th + h * t3);
    Eigen::MatrixXcd l4 = -pmat(th + h * t3) * (L + h * l3);
    th += (h / 6) * (t1 + 2 * t2 + 2 * t3 + t4);
    L += (h / 6) * (l1 + 2 * l2 + 2 * l3 + l4);
  }
  return L;
}

FlowMap build_flow(const Jet& S_jet, double t, double eta, double nu,
                   double sigma, double mu, double s, double beta,
                   bool fit_series) {
  if (eta <= 0 || nu <= 0)
    throw std::runtime_error("build_flow: non-positive margins");
  const double sz = jet_norm(S_jet, sigma, mu, s, beta, true);
  if (sz > 0.5 * nu * nu * eta)
    throw std::runtime_error("build_flow: smallness precondition violated");
  FlowMap phi;
  phi.n = S_jet.n;
  phi.cl = S_jet.cl;
  phi.gen = S_jet;
  phi.t = t;
  // K and T as Fourier series on a theta-grid (structure/reporting only;
  // transport and the symplecticity check integrate pointwise)
  int ks = 0;
  auto upd = [&](const auto& series) {
    for (const auto& [k, c] : series.c)
      for (int i = 0; i < phi.n; ++i) ks = std::max(ks, std::abs(k[i]));
  };
  upd(S_jet.ftheta);
  upd(S_jet.fr);
  upd(S_jet.fzeta);
  upd(S_jet.fzz);
  const int kcap = std::min(ks, phi.n > 2 ? 3 : 8);
  const int G = 2 * kcap + 1;
  phi.K.n = phi.T.n = phi.n;
  if (fit_series && kcap >= 0 && phi.n <= 2) {
    GenCache gc(S_jet, *phi.cl);
    const int total = (phi.n == 1) ? G : G * G;
    std::vector<Eigen::VectorXcd> kd(total);
    std::vector<Eigen::VectorXcd> td(total);
    for (int g = 0; g < total; ++g) {
      Eigen::VectorXcd th(phi.n);
      int rem = g;
      for (int i = 0; i < phi.n; ++i) {
        th[i] = 2.0 * M_PI * (rem % G) / G;
        rem /= G;
      }
      FullState x{Eigen::VectorXcd::Zero(phi.n), th,
                  Eigen::VectorXcd::Zero(gc.dim)};
      FullState y = rk4_full(gc, x, t, 64);
      kd[g] = y.theta - th;
      td[g] = y.zeta;
    }
    for (int k0 = -kcap; k0 <= kcap; ++k0)
      for (int k1 = (phi.n > 1 ? -kcap : 0); k1 <= (phi.n > 1 ? kcap : 0);
           ++k1) {
        Eigen::VectorXcd ck = Eigen::VectorXcd::Zero(phi.n);
        Eigen::VectorXcd ct = Eigen::VectorXcd::Zero(gc.dim);
        for (int g = 0; g < total; ++g) {
          int rem = g;
          double ang = 0;
          const int kk[2] = {k0, k1};
          for (int i = 0; i < phi.n; ++i) {
            ang += kk[i] * 2.0 * M_PI * (rem % G) / G;
            rem /= G;
          }
          const Cx ph = std::exp(Cx(0, -ang));
          ck += ph * kd[g];
          ct += ph * td[g];
        }
        ck /= double(total);
        ct /= double(total);
        if (ck.cwiseAbs().maxCoeff() > 1e-14)
          phi.K.add(KIdx{k0, k1, 0, 0}, ck);
        if (ct.cwiseAbs().maxCoeff() > 1e-14)
          phi.T.add(KIdx{k0, k1, 0, 0}, from_flat(*phi.cl, ct));
      }
  }
  return phi;
}

Point transport(const FlowMap& phi, const Point& x) {
  GenCache gc(phi.gen, *phi.cl);
  FullState st{x.r, x.theta, to_flat(x.zeta)};
  FullState y = rk4_full(gc, st, phi.t, phi.steps);
  return {y.r, y.theta, from_flat(*phi.cl, y.zeta)};
}

double symplecticity_defect(const FlowMap& phi, const Eigen::VectorXcd& theta) {
  GenCache gc(phi.gen, *phi.cl);
  const int n = phi.n, dim = gc.dim;
  using MX = Eigen::MatrixXcd;
  using VX = Eigen::VectorXcd;

  struct VState {
    VX th, a, r;
    MX Dth, U, Y, Drr, Drth, Drz;
  };
  VState x{theta,
           VX::Zero(dim),
           VX::Zero(n),
           MX::Identity(n, n),
           MX::Identity(dim, dim),
           MX::Zero(dim, n),
           MX::Identity(n, n),
           MX::Zero(n, n),
           MX::Zero(n, dim)};

  auto f = [&](const VState& v) {
    VState d;
    VX sr = VX::Zero(n);
    MX dsr = MX::Zero(n, n);  // dsr(i,j) = d/dtheta_j fr_i
    VX sz = VX::Zero(dim);
    MX dsz = MX::Zero(dim, n);
    MX szz = MX::Zero(dim, dim);
    std::vector<VX> gcol(n, VX::Zero(dim));  // g_i = d_i(fz + fzz a)
    MX H = MX::Zero(n, n);
    VX dv = VX::Zero(n);  // grad_theta of the full jet value
    for (const auto& it : gc.items) {
      const Cx p = gc.phase(it, v.th);
      sr += p * it.r;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dsr(i, j) += Cx(0, it.k[j]) * p * it.r[i];
      Cx val = it.th;
      for (int i = 0; i < n; ++i) val += it.r[i] * v.r[i];
      VX zza;
      if (it.has_zz) zza = it.zz * v.a;
      if (it.has_z) {
        sz += p * it.z;
        for (int i = 0; i < dim; ++i) val += it.z[i] * v.a[i];
      }
      if (it.has_zz) {
        szz += p * it.zz;
        Cx q = 0;
        for (int i = 0; i < dim; ++i) q += v.a[i] * zza[i];
        val += 0.5 * q;
      }
      for (int i = 0; i < n; ++i) {
        const Cx wi = Cx(0, it.k[i]) * p;
        dv[i] += wi * val;
        if (it.has_z) {
          dsz.col(i) += wi * it.z;
          gcol[i] += wi * it.z;
        }
        if (it.has_zz) gcol[i] += wi * zza;
        for (int j = 0; j < n; ++j)
          H(i, j) += Cx(0, it.k[i]) * Cx(0, it.k[j]) * p * val;
      }
    }
    d.th = sr;
    d.Dth = dsr * v.Dth;
    d.a = J_flat(VX(sz + szz * v.a));
    d.U = J_flat(MX(szz * v.U));
    MX yrhs = szz * v.Y;
    for (int q = 0; q < n; ++q)
      for (int j = 0; j < n; ++j) yrhs.col(q) += gcol[j] * v.Dth(j, q);
    d.Y = J_flat(yrhs);
    d.r = -dv;
    const MX P = dsr.transpose();  // P(i,j) = d_i fr_j
    d.Drr = -P * v.Drr;
    d.Drth = -(H * v.Dth + P * v.Drth);
    for (int i = 0; i < n; ++i)
      for (int q = 0; q < n; ++q)
        d.Drth(i, q) -= gcol[i].cwiseProduct(v.Y.col(q)).sum();
    d.Drz = -(P * v.Drz);
    for (int i = 0; i < n; ++i)
      d.Drz.row(i) -= (v.U.transpose() * gcol[i]).transpose();
    return d;
  };

  auto step_add = [&](VState& v, double h, const VState& d) {
    v.th += h * d.th;
    v.a += h * d.a;
    v.r += h * d.r;
    v.Dth += h * d.Dth;
    v.U += h * d.U;
    v.Y += h * d.Y;
    v.Drr += h * d.Drr;
    v.Drth += h * d.Drth;
    v.Drz += h * d.Drz;
  };
  auto mixed = [&](const VState& v, double h, const VState& d) {
    VState o = v;
    step_add(o, h, d);
    return o;
  };

  const int steps = phi.steps;
  const double h = phi.t / steps;
  for (int s = 0; s < steps; ++s) {
    VState k1 = f(x);
    VState k2 = f(mixed(x, h / 2, k1));
    VState k3 = f(mixed(x, h / 2, k2));
    VState k4 = f(mixed(x, h, k3));
    step_add(x, h / 6, k1);
    step_add(x, h / 3, k2);
    step_add(x, h / 3, k3);
    step_add(x, h / 6, k4);
  }

  const int N = 2 * n + dim;
  MX D = MX::Zero(N, N);
  D.block(0, 0, n, n) = x.Drr;
  D.block(0, n, n, n) = x.Drth;
  D.block(0, 2 * n, n, dim) = x.Drz;
  D.block(n, n, n, n) = x.Dth;
  D.block(2 * n, n, dim, n) = x.Y;
  D.block(2 * n, 2 * n, dim, dim) = x.U;
  MX Om = MX::Zero(N, N);
  Om.block(0, n, n, n) = MX::Identity(n, n);
  Om.block(n, 0, n, n) = -MX::Identity(n, n);
  for (int i = 0; i < dim; i += 2) {
    Om(2 * n + i, 2 * n + i + 1) = 1;  // J^{-1} = -J : (-J)(p,q)=(q,-p)
    Om(2 * n + i + 1, 2 * n + i) = -1;
  }
  return (D.transpose() * Om * D - Om).norm();
}

PolyHamiltonian pullback_checked(const PolyHamiltonian& h, const Jet& S_jet,
                                 int M_lie, double sigma, double sigma_p,
                                 double mu, double mu_p, double s, double beta,
                                 double tol_abs, double drop_tol,
                                 double t_scale) {
  const double sz = jet_norm(S_jet, sigma, mu, s, beta, true);
  const double lim = 0.5 * (mu - mu_p) * (mu - mu_p) * (sigma - sigma_p);
  if (mu_p >= mu || sigma_p >= sigma || sz > lim)
    throw std::runtime_error("pullback: smallness precondition violated");
  return pullback(h, S_jet, M_lie, sigma, mu, s, beta, tol_abs, drop_tol,
                  t_scale);
}

}  // namespace kamnf
