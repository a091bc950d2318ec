#include "kamnf/apps.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "kamnf/quadrature.hpp"

namespace kamnf {

namespace {
const double pi = std::acos(-1.0);

// normalized associated Legendre P~_l^m (Schmidt/orthonormal, no
// Condon-Shortley), such that Y_{l,0} = P~_l^0 and
// Y_{l,m>0} = sqrt(2) cos(m phi) P~_l^m
double norm_assoc_legendre(int l, int m, double ct, double st) {
  double pmm = std::sqrt(1.0 / (4.0 * pi));
  for (int k = 1; k <= m; ++k)
    pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * st;
  if (l == m) return pmm;
  double pm1 = ct * std::sqrt(2.0 * m + 3.0) * pmm;
  if (l == m + 1) return pm1;
  for (int ll = m + 2; ll <= l; ++ll) {
    double a = std::sqrt((4.0 * ll * ll - 1.0) / (double(ll) * ll - m * m));
    double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - m * m) /
                         (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
    double p = a * (ct * pm1 - b * pmm);
    pmm = pm1;
    pm1 = p;
  }
  return pm1;
}

// orthonormal Hermite function of order m (weight included)
double hermite_fn(int m, double x) {
  double h0 = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
  if (m == 0) return h0;
  double h1 = std::sqrt(2.0) * x * h0;
  for (int k = 1; k < m; ++k) {
    double h2 = x * std::sqrt(2.0 / (k + 1)) * h1 -
                std::sqrt(double(k) / (k + 1)) * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

}  // namespace

double sph_harmonic(int j, int l, double theta, double phi) {
  if (j < 0 || std::abs(l) > j)
    throw std::invalid_argument("sph_harmonic: |l| > j");
  double ct = std::cos(theta), st = std::sin(theta);
  if (l == 0) return norm_assoc_legendre(j, 0, ct, st);
  int m = std::abs(l);
  double p = norm_assoc_legendre(j, m, ct, st) * std::sqrt(2.0);
  return l > 0 ? p * std::cos(m * phi) : p * std::sin(m * phi);
}

double hermite(int i, double x) {
  if (i < 1 || i % 2 == 0)
    throw std::invalid_argument("hermite: odd index >= 1 required");
  return hermite_fn((i - 1) / 2, x);
}

double qho_basis(int j, int l, double x1, double x2) {
  if (l < 1 || l > j) throw std::invalid_argument("qho_basis: 1 <= l <= j");
  return hermite_fn(l - 1, x1) * hermite_fn(j - l, x2);
}

double qho_kernel(int j, double x1, double x2) {
  double s = 0;
  for (int l = 1; l <= j; ++l) {
    double v = qho_basis(j, l, x1, x2);
    s += v * v;
  }
  return s;
}

SphereQuad sphere_quadrature(int W_max) {
  const int ng = 2 * W_max + 4;
  const int np = 4 * W_max + 4;
  QuadRule gl = gauss_legendre(ng);
  SphereQuad q;
  q.theta.reserve(ng * np);
  for (int i = 0; i < ng; ++i) {
    double th = std::acos(gl.x[i]);
    for (int k = 0; k < np; ++k) {
      q.theta.push_back(th);
      q.phi.push_back(2.0 * pi * k / np);
      q.w.push_back(gl.w[i] * 2.0 * pi / np);
    }
  }
  return q;
}

PlaneQuad plane_quadrature(int nodes_per_axis) {
  QuadRule gh = gauss_hermite(nodes_per_axis);
  PlaneQuad q;
  for (int i = 0; i < nodes_per_axis; ++i)
    for (int k = 0; k < nodes_per_axis; ++k) {
      q.x1.push_back(gh.x[i]);
      q.x2.push_back(gh.x[k]);
      q.w.push_back(gh.w[i] * gh.w[k] *
                    std::exp(gh.x[i] * gh.x[i] + gh.x[k] * gh.x[k]));
    }
  return q;
}

namespace {

// small symbolic polynomial in r with theta-Fourier coefficients
struct SPoly {
  int n = 0;
  std::map<KIdx, FourierSeries<Cx>> t;

  void add_term(const KIdx& alpha, const KIdx& k, Cx c) {
    auto& s = t[alpha];
    s.n = n;
    s.add(k, c);
  }
  SPoly& operator+=(const SPoly& o) {
    for (const auto& [a, s] : o.t) {
      auto& mine = t[a];
      mine.n = n;
      mine += s;
    }
    return *this;
  }
  SPoly& operator*=(Cx c) {
    for (auto& [a, s] : t) s *= c;
    return *this;
  }
};

KIdx alpha_add(const KIdx& a, const KIdx& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

SPoly smul(const SPoly& a, const SPoly& b, int amax, int K_cap) {
  SPoly o;
  o.n = a.n;
  for (const auto& [aa, sa] : a.t)
    for (const auto& [ab, sb] : b.t) {
      KIdx al = alpha_add(aa, ab);
      if (l1(al) > amax) continue;
      FourierSeries<Cx> cs = conv(sa, sb, K_cap, 0.0);
      auto& mine = o.t[al];
      mine.n = o.n;
      mine += cs;
    }
  return o;
}

SPoly sone(int n) {
  SPoly o;
  o.n = n;
  o.add_term({0, 0, 0, 0}, {0, 0, 0, 0}, Cx(1, 0));
  return o;
}

// sqrt(I + r_axis) expanded to order qmax in r_axis
SPoly sqrt_series(double I, int axis, int qmax, int n) {
  SPoly o;
  o.n = n;
  double c = std::sqrt(I);
  double b = 1.0;
  for (int q = 0; q <= qmax; ++q) {
    if (q > 0) {
      b *= (0.5 - (q - 1)) / q;
    }
    KIdx alpha{0, 0, 0, 0};
    alpha[axis] = q;
    o.add_term(alpha, {0, 0, 0, 0}, Cx(c * b * std::pow(I, -double(q)), 0));
  }
  return o;
}

// e^{i sign theta_axis} or cos(theta_axis)
SPoly phase_series(int axis, int n, bool cosine, int sign = +1) {
  SPoly o;
  o.n = n;
  KIdx kp{0, 0, 0, 0}, km{0, 0, 0, 0};
  kp[axis] = 1;
  km[axis] = -1;
  if (cosine) {
    o.add_term({0, 0, 0, 0}, kp, Cx(0.5, 0));
    o.add_term({0, 0, 0, 0}, km, Cx(0.5, 0));
  } else {
    o.add_term({0, 0, 0, 0}, sign > 0 ? kp : km, Cx(1, 0));
  }
  return o;
}

long multinomial(const std::vector<int>& e) {
  long tot = 0, r = 1;
  for (int x : e) {
    for (int i = 1; i <= x; ++i) {
      ++tot;
      r = r * tot / i;
    }
  }
  return r;
}

// all exponent vectors over `nt` slots with total degree <= pmax
void combos_rec(int slot, int left, std::vector<int>& cur,
                std::vector<std::vector<int>>& out) {
  if (slot == int(cur.size())) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur[slot] = e;
    combos_rec(slot + 1, left - e, cur, out);
  }
  cur[slot] = 0;
}

std::vector<std::vector<int>> combos(int nt, int pmax) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(nt, 0);
  combos_rec(0, pmax, cur, out);
  return out;
}

// products of template powers, keyed by exponent vector
std::map<std::vector<int>, SPoly> template_products(
    const std::vector<SPoly>& tmpl, int pmax, int amax, int K_cap, int n) {
  std::map<std::vector<int>, SPoly> out;
  for (const auto& e : combos(int(tmpl.size()), pmax)) {
    // build by extending an already-computed product with one factor
    int tot = 0;
    for (int x : e) tot += x;
    if (tot == 0) {
      out[e] = sone(n);
      continue;
    }
    std::vector<int> prev = e;
    int ax = 0;
    while (prev[ax] == 0) ++ax;
    prev[ax] -= 1;
    out[e] = smul(out.at(prev), tmpl[ax], amax, K_cap);
  }
  return out;
}

int axis_of(const KIdx& alpha) {
  for (int i = 0; i < 4; ++i)
    if (alpha[i] != 0) return i;
  return -1;
}

void fold_terms(PolyHamiltonian& f, const SPoly& B,
                const std::vector<FactorPtr>& facs) {
  const int m = int(facs.size());
  const int n = f.jet.n;
  for (const auto& [alpha, series] : B.t) {
    if (series.c.empty()) continue;
    const int deg = 2 * l1(alpha) + m;
    if (deg > f.D_max) continue;
    if (deg <= 2) {
      if (m == 0) {
        if (l1(alpha) == 0) {
          f.jet.ftheta += series;
        } else {
          int ax = axis_of(alpha);
          for (const auto& [k, c] : series.c) {
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
            v[ax] = c;
            f.jet.fr.add(k, std::move(v));
          }
        }
      } else if (m == 1) {
        for (const auto& [k, c] : series.c) {
          ModeVector mv = facs[0]->v;
          mv *= c;
          f.jet.fzeta.add(k, std::move(mv));
        }
      } else {
        BlockMatrix M = outer(facs[0]->v, facs[1]->v);
        M += outer(facs[1]->v, facs[0]->v);
        for (const auto& [k, c] : series.c) {
          BlockMatrix Mk = M;
          Mk *= c;
          f.jet.fzz.add(k, std::move(Mk));
        }
      }
    } else {
      HighTerm T;
      T.alpha = alpha;
      T.coeff = series;
      T.coeff.n = n;
      T.factors = facs;
      f.terms.push_back(std::move(T));
    }
  }
}

// nonlinearity menu: coefficients g_p of u^p in the primitive G, p <= cap
std::vector<double> g_coeffs(KGNonlin g, int cap) {
  std::vector<double> out(cap + 1, 0.0);
  if (g == KGNonlin::U2 && cap >= 3) out[3] = 1.0 / 3.0;
  if (g == KGNonlin::U3 && cap >= 4) out[4] = 0.25;
  if (g == KGNonlin::SIN_U) {
    // 1 - cos u = u^2/2! - u^4/4! + ...
    double f = 1.0;
    for (int p = 2; p <= cap; p += 2) {
      f *= (p - 1) * p;
      out[p] = ((p / 2) % 2 == 1 ? 1.0 : -1.0) / f;
    }
  }
  return out;
}

long binom(int p, int m) {
  long r = 1;
  for (int i = 0; i < m; ++i) r = r * (p - i) / (i + 1);
  return r;
}

}  // namespace

BuiltModel kg_build(const KGProblem& prob, const Eigen::VectorXd& rho,
                    int W_max, int D_max, int K_max) {
  const SpectralModel& mdl = prob.model;
  const AdmissibleSet& A = prob.A;
  const int n = A.n();
  BuiltModel out;
  Clustering full = enumerate_modes(mdl, W_max);
  out.cl = std::make_shared<Clustering>(remove_admissible(full, A));
  const Clustering& cl = *out.cl;

  out.h0.omega = omega0(mdl, A, rho);
  out.h0.A = BlockMatrix(cl, true);
  for (int ci = 0; ci < cl.n_clusters(); ++ci) {
    const int d = cl.levels[ci].dim();
    Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    for (int p = 0; p < d; ++p) {
      double lam = eigenvalue(mdl, cl.levels[ci].modes[p]);
      blk(2 * p, 2 * p) = lam;
      blk(2 * p + 1, 2 * p + 1) = lam;
    }
    out.h0.A.set_block(ci, ci, blk);
  }

  out.f = PolyHamiltonian(n, cl);
  out.f.D_max = D_max;
  out.f.K_max = K_max;
  std::vector<double> gp = g_coeffs(prob.g, D_max);
  bool any = false;
  for (double v : gp) any = any || v != 0;
  if (!any) return out;

  // tangential templates sqrt(I_a + r_a) cos(theta_a)
  const int qmax = D_max / 2;
  const int amax = D_max / 2;
  std::vector<SPoly> tmpl;
  std::vector<double> lam_t(n);
  for (int a = 0; a < n; ++a) {
    lam_t[a] = eigenvalue(mdl, A.modes[a]);
    tmpl.push_back(smul(sqrt_series(A.actions[a], a, qmax, n),
                        phase_series(a, n, true), amax, K_max));
  }
  auto tp = template_products(tmpl, D_max, amax, K_max, n);

  SphereQuad q = sphere_quadrature(W_max);
  const int nn = int(q.w.size());
  for (int x = 0; x < nn; ++x) {
    // tangential scalars and the normal-direction vector at this node
    std::vector<double> ca(n);
    for (int a = 0; a < n; ++a)
      ca[a] = sph_harmonic(A.modes[a].j, A.modes[a].l, q.theta[x], q.phi[x]) /
              std::sqrt(lam_t[a]);
    ModeVector v(cl);
    for (int ci = 0; ci < cl.n_clusters(); ++ci) {
      const int d = cl.levels[ci].dim();
      for (int p = 0; p < d; ++p) {
        const ModeIndex& b = cl.levels[ci].modes[p];
        v.v[ci][2 * p] =
            sph_harmonic(b.j, b.l, q.theta[x], q.phi[x]) /
            std::sqrt(eigenvalue(mdl, b));
      }
    }
    FactorPtr vf = make_vec_factor(std::move(v));

    for (int m = 0; m <= D_max; ++m) {
      SPoly Bm;
      Bm.n = n;
      bool got = false;
      for (int p = m; p <= D_max; ++p) {
        if (gp[p] == 0) continue;
        const int pm = p - m;
        for (const auto& e : combos(n, pm)) {
          int tot = 0;
          for (int v2 : e) tot += v2;
          if (tot != pm) continue;
          double sc = gp[p] * double(binom(p, m)) * double(multinomial(e)) *
                      q.w[x];
          for (int a = 0; a < n; ++a) sc *= std::pow(ca[a], e[a]);
          if (sc == 0) continue;
          SPoly piece = tp.at(e);
          piece *= Cx(sc, 0);
          Bm += piece;
          got = true;
        }
      }
      if (!got) continue;
      std::vector<FactorPtr> facs(m, vf);
      fold_terms(out.f, Bm, facs);
    }
  }
  out.f.jet.symmetrize_real();
  return out;
}

namespace {

// 1-D moment table M(alpha, beta) = sum_i w_i g_i h_alpha(x_i) h_beta(x_i)
Eigen::MatrixXd moment_table(const QuadRule& gh,
                             const std::vector<double>& gvec, int omax) {
  const int nn = int(gh.x.size());
  Eigen::MatrixXd H(nn, omax + 1);
  for (int i = 0; i < nn; ++i)
    for (int o = 0; o <= omax; ++o) H(i, o) = hermite_fn(o, gh.x[i]);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(omax + 1, omax + 1);
  for (int i = 0; i < nn; ++i) {
    double wg = gh.w[i] * std::exp(gh.x[i] * gh.x[i]) * gvec[i];
    M.noalias() += wg * H.row(i).transpose() * H.row(i);
  }
  return M;
}

}  // namespace

BuiltModel qho_build(const QHOProblem& prob, const Eigen::VectorXd& rho,
                     int W_max, int D_max, int K_max) {
  const SpectralModel& mdl = prob.model;
  const AdmissibleSet& A = prob.A;
  const int n = A.n();
  const double beta = prob.beta_reg;
  BuiltModel out;
  Clustering fullc = enumerate_modes(mdl, W_max);
  out.cl = std::make_shared<Clustering>(remove_admissible(fullc, A));
  const Clustering& cl = *out.cl;

  out.h0.omega = omega0(mdl, A, rho);
  out.h0.A = BlockMatrix(cl, true);
  for (int ci = 0; ci < cl.n_clusters(); ++ci) {
    const int d = cl.levels[ci].dim();
    Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    for (int p = 0; p < d; ++p) {
      double lam = eigenvalue(mdl, cl.levels[ci].modes[p]);
      blk(2 * p, 2 * p) = lam;
      blk(2 * p + 1, 2 * p + 1) = lam;
    }
    out.h0.A.set_block(ci, ci, blk);
  }

  out.f = PolyHamiltonian(n, cl);
  out.f.D_max = D_max;
  out.f.K_max = K_max;

  const int nn_axis = 4 * W_max + 8;
  PlaneQuad q = plane_quadrature(nn_axis);
  const int nn = int(q.w.size());

  auto wreg = [&](const ModeIndex& b) {
    return std::pow(std::max(double(b.j), 1.0), -beta);
  };

  // tangential templates sqrt(r0_a + r_a) e^{+- i theta_a}
  const int qmax = D_max / 2;
  const int amax = D_max / 2;
  std::vector<SPoly> tmpl;  // first n: u-side, next n: conjugates
  for (int a = 0; a < n; ++a)
    tmpl.push_back(smul(sqrt_series(A.actions[a], a, qmax, n),
                        phase_series(a, n, false, +1), amax, K_max));
  for (int a = 0; a < n; ++a)
    tmpl.push_back(smul(sqrt_series(A.actions[a], a, qmax, n),
                        phase_series(a, n, false, -1), amax, K_max));

  auto eval_ca = [&](int x) {
    std::vector<double> ca(n);
    for (int a = 0; a < n; ++a)
      ca[a] = qho_basis(A.modes[a].j, A.modes[a].l, q.x1[x], q.x2[x]) *
              wreg(A.modes[a]);
    return ca;
  };
  auto eval_vu = [&](int x, bool conj_side) {
    ModeVector v(cl);
    const double rs = 1.0 / std::sqrt(2.0);
    for (int ci = 0; ci < cl.n_clusters(); ++ci) {
      const int d = cl.levels[ci].dim();
      for (int p = 0; p < d; ++p) {
        const ModeIndex& b = cl.levels[ci].modes[p];
        double phib = qho_basis(b.j, b.l, q.x1[x], q.x2[x]) * wreg(b) * rs;
        // xi_b = (p + iq)/sqrt2, eta_b = (p - iq)/sqrt2
        v.v[ci][2 * p] = Cx(phib, 0);
        v.v[ci][2 * p + 1] = conj_side ? Cx(0, -phib) : Cx(0, phib);
      }
    }
    return v;
  };

  if (prob.F == QHONonlin::NLS_PLUS || prob.F == QHONonlin::NLS_MINUS) {
    const double sgn = prob.F == QHONonlin::NLS_PLUS ? 0.25 : -0.25;
    auto tp = template_products(tmpl, 4, amax, K_max, n);
    for (int x = 0; x < nn; ++x) {
      std::vector<double> ca = eval_ca(x);
      FactorPtr fu = make_vec_factor(eval_vu(x, false));
      FactorPtr fub = make_vec_factor(eval_vu(x, true));
      for (int a = 0; a <= 2; ++a)
        for (int b = 0; b <= 2; ++b) {
          // A^{2-a} Abar^{2-b} V^a Vbar^b
          const int pu = 2 - a, pv = 2 - b;
          SPoly B;
          B.n = n;
          bool got = false;
          for (const auto& eu : combos(n, pu)) {
            int tu = 0;
            for (int v2 : eu) tu += v2;
            if (tu != pu) continue;
            for (const auto& ev : combos(n, pv)) {
              int tv = 0;
              for (int v2 : ev) tv += v2;
              if (tv != pv) continue;
              std::vector<int> key(2 * n, 0);
              double sc = sgn * double(binom(2, a)) * double(binom(2, b)) *
                          double(multinomial(eu)) * double(multinomial(ev)) *
                          q.w[x];
              for (int i = 0; i < n; ++i) {
                key[i] = eu[i];
                key[n + i] = ev[i];
                sc *= std::pow(ca[i], eu[i]) * std::pow(ca[i], ev[i]);
              }
              if (sc == 0) continue;
              SPoly piece = tp.at(key);
              piece *= Cx(sc, 0);
              B += piece;
              got = true;
            }
          }
          if (!got) continue;
          std::vector<FactorPtr> facs;
          for (int i = 0; i < a; ++i) facs.push_back(fu);
          for (int i = 0; i < b; ++i) facs.push_back(fub);
          fold_terms(out.f, B, facs);
        }
    }
  } else {
    // Hartree: F = iint |u(x)|^2 phi(x-y) |u(y)|^2, Gaussian phi separated
    // per axis by SVD on the quadrature grid.
    QuadRule gh = gauss_hermite(nn_axis);
    const double wdt = prob.hartree_width;
    Eigen::MatrixXd K1(nn_axis, nn_axis);
    for (int i = 0; i < nn_axis; ++i)
      for (int k = 0; k < nn_axis; ++k) {
        double d = gh.x[i] - gh.x[k];
        K1(i, k) = std::exp(-d * d / (2 * wdt * wdt)) /
                   std::sqrt(2 * pi * wdt * wdt);
      }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        K1, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv[rank] > 1e-10 * sv[0]) ++rank;

    const int omax = 2 * W_max;  // largest 1-D Hermite order retained
    // per-rank 1-D moment tables for both sides of the kernel
    std::vector<Eigen::MatrixXd> MU(rank), MV(rank);
    for (int r = 0; r < rank; ++r) {
      std::vector<double> gu(nn_axis), gv(nn_axis);
      double sq = std::sqrt(sv[r]);
      for (int i = 0; i < nn_axis; ++i) {
        gu[i] = sq * svd.matrixU()(i, r);
        gv[i] = sq * svd.matrixV()(i, r);
      }
      MU[r] = moment_table(gh, gu, omax);
      MV[r] = moment_table(gh, gv, omax);
    }

    // |u|^2 observable against a separable density given by per-axis moment
    // tables M1, M2: scalar part, linear pieces (per tangential a, both
    // conjugation sides), and the quadratic piece.
    struct Obs {
      SPoly s;
      std::vector<std::pair<SPoly, FactorPtr>> lin;
      FactorPtr quad;  // nullptr if absent
    };
    auto density_moment = [&](const Eigen::MatrixXd& M1,
                              const Eigen::MatrixXd& M2, const ModeIndex& a,
                              const ModeIndex& b) {
      return M1(a.l - 1, b.l - 1) * M2(a.j - a.l, b.j - b.l);
    };
    auto build_obs = [&](const Eigen::MatrixXd& M1,
                         const Eigen::MatrixXd& M2) {
      Obs o;
      o.s.n = n;
      // scalar: sum_{a,b in A} Tbar_a T_b m(a,b) w_a^-b w_b^-b
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double m = density_moment(M1, M2, A.modes[a], A.modes[b]) *
                     wreg(A.modes[a]) * wreg(A.modes[b]);
          SPoly piece = smul(tmpl[n + a], tmpl[b], amax, K_max);
          piece *= Cx(m, 0);
          o.s += piece;
        }
      // linear: Tbar_a * <v, zeta> with v_b = m(a,b), plus conjugate
      const double rs = 1.0 / std::sqrt(2.0);
      for (int a = 0; a < n; ++a) {
        ModeVector vu(cl), vub(cl);
        for (int ci = 0; ci < cl.n_clusters(); ++ci) {
          const int d = cl.levels[ci].dim();
          for (int p = 0; p < d; ++p) {
            const ModeIndex& b = cl.levels[ci].modes[p];
            double m = density_moment(M1, M2, A.modes[a], b) *
                       wreg(A.modes[a]) * wreg(b) * rs;
            vu.v[ci][2 * p] = Cx(m, 0);
            vu.v[ci][2 * p + 1] = Cx(0, m);
            vub.v[ci][2 * p] = Cx(m, 0);
            vub.v[ci][2 * p + 1] = Cx(0, -m);
          }
        }
        o.lin.push_back({tmpl[n + a], make_vec_factor(std::move(vu))});
        o.lin.push_back({tmpl[a], make_vec_factor(std::move(vub))});
      }
      // quadratic: zeta^T Q zeta = <vu, zeta><vubar, zeta> summed over modes
      ModeVector dummy(cl);
      BlockMatrix Q(cl, true);
      for (int ci = 0; ci < cl.n_clusters(); ++ci)
        for (int cj = 0; cj < cl.n_clusters(); ++cj) {
          const int da = cl.levels[ci].dim(), db = cl.levels[cj].dim();
          Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(2 * da, 2 * db);
          for (int p = 0; p < da; ++p)
            for (int r2 = 0; r2 < db; ++r2) {
              const ModeIndex& a = cl.levels[ci].modes[p];
              const ModeIndex& b = cl.levels[cj].modes[r2];
              double m = 0.5 * density_moment(M1, M2, a, b) * wreg(a) *
                         wreg(b);
              // Re: 1/2 (vu vubar^T + vubar vu^T) with cells (1,i),(1,-i)
              blk(2 * p, 2 * r2) = m;
              blk(2 * p + 1, 2 * r2 + 1) = m;
            }
          Q.set_block(ci, cj, blk);
        }
      o.quad = make_quad_factor(std::move(Q));
      return o;
    };

    for (int r1 = 0; r1 < rank; ++r1)
      for (int r2 = 0; r2 < rank; ++r2) {
        Obs G = build_obs(MU[r1], MU[r2]);
        Obs H = build_obs(MV[r1], MV[r2]);
        // product G * H
        fold_terms(out.f, smul(G.s, H.s, amax, K_max), {});
        for (auto& [sp, fp] : H.lin)
          fold_terms(out.f, smul(G.s, sp, amax, K_max), {fp});
        for (auto& [sp, fp] : G.lin)
          fold_terms(out.f, smul(sp, H.s, amax, K_max), {fp});
        fold_terms(out.f, G.s, {H.quad});
        fold_terms(out.f, H.s, {G.quad});
        for (auto& [sg, fg] : G.lin)
          for (auto& [sh, fh] : H.lin)
            fold_terms(out.f, smul(sg, sh, amax, K_max), {fg, fh});
        for (auto& [sg, fg] : G.lin)
          fold_terms(out.f, sg, {fg, H.quad});
        for (auto& [sh, fh] : H.lin)
          fold_terms(out.f, sh, {fh, G.quad});
        {
          SPoly one = sone(n);
          fold_terms(out.f, one, {G.quad, H.quad});
        }
      }
  }
  out.f.jet.symmetrize_real();
  return out;
}

Eigen::MatrixXd kg_hessian_hs(const KGProblem& prob, int W_max) {
  const SpectralModel& mdl = prob.model;
  const AdmissibleSet& A = prob.A;
  Clustering cl = remove_admissible(enumerate_modes(mdl, W_max), A);
  SphereQuad q = sphere_quadrature(W_max);
  const int nc = cl.n_clusters();
  const int nn = int(q.w.size());

  auto dgdu = [&](double u) {
    switch (prob.g) {
      case KGNonlin::U2:
        return 2.0 * u;
      case KGNonlin::U3:
        return 3.0 * u * u;
      default:
        return std::cos(u);
    }
  };

  // flat list of normal modes and their basis values per node
  std::vector<std::pair<int, ModeIndex>> flat;
  for (int ci = 0; ci < nc; ++ci)
    for (const auto& b : cl.levels[ci].modes) flat.push_back({ci, b});
  const int nm = int(flat.size());
  Eigen::MatrixXd psi(nn, nm);
  Eigen::VectorXd lam(nm);
  for (int m = 0; m < nm; ++m) {
    lam[m] = eigenvalue(mdl, flat[m].second);
    for (int x = 0; x < nn; ++x)
      psi(x, m) = sph_harmonic(flat[m].second.j, flat[m].second.l, q.theta[x],
                               q.phi[x]);
  }
  Eigen::VectorXd dens(nn);
  for (int x = 0; x < nn; ++x) {
    double u1 = 0;
    for (int a = 0; a < A.n(); ++a)
      u1 += std::sqrt(A.actions[a]) *
            sph_harmonic(A.modes[a].j, A.modes[a].l, q.theta[x], q.phi[x]) /
            std::sqrt(eigenvalue(mdl, A.modes[a]));
    dens[x] = dgdu(u1) * q.w[x];
  }
  Eigen::MatrixXd M = psi.transpose() * dens.asDiagonal() * psi;
  for (int i = 0; i < nm; ++i)
    for (int j = 0; j < nm; ++j) M(i, j) /= 2.0 * std::sqrt(lam[i] * lam[j]);

  Eigen::MatrixXd hs = Eigen::MatrixXd::Zero(nc, nc);
  for (int i = 0; i < nm; ++i)
    for (int j = 0; j < nm; ++j)
      hs(flat[i].first, flat[j].first) += M(i, j) * M(i, j);
  return hs.cwiseSqrt();
}

Eigen::MatrixXd qho_hessian_hs(const QHOProblem& prob, int W_max) {
  const SpectralModel& mdl = prob.model;
  const AdmissibleSet& A = prob.A;
  Clustering cl = remove_admissible(enumerate_modes(mdl, W_max), A);
  PlaneQuad q = plane_quadrature(4 * W_max + 8);
  const int nc = cl.n_clusters();
  const int nn = int(q.w.size());
  const double beta = prob.beta_reg;

  std::vector<std::pair<int, ModeIndex>> flat;
  for (int ci = 0; ci < nc; ++ci)
    for (const auto& b : cl.levels[ci].modes) flat.push_back({ci, b});
  const int nm = int(flat.size());
  Eigen::MatrixXd phi(nn, nm);
  for (int m = 0; m < nm; ++m)
    for (int x = 0; x < nn; ++x)
      phi(x, m) = qho_basis(flat[m].second.j, flat[m].second.l, q.x1[x],
                            q.x2[x]);
  Eigen::VectorXd dens(nn);
  for (int x = 0; x < nn; ++x) {
    double u1 = 0;
    for (int a = 0; a < A.n(); ++a)
      u1 += std::sqrt(A.actions[a]) *
            qho_basis(A.modes[a].j, A.modes[a].l, q.x1[x], q.x2[x]) *
            std::pow(std::max(double(A.modes[a].j), 1.0), -beta);
    dens[x] = u1 * u1 * q.w[x];
  }
  Eigen::MatrixXd M = phi.transpose() * dens.asDiagonal() * phi;
  for (int i = 0; i < nm; ++i)
    for (int j = 0; j < nm; ++j)
      M(i, j) *= std::pow(double(flat[i].second.j), -beta) *
                 std::pow(double(flat[j].second.j), -beta);

  Eigen::MatrixXd hs = Eigen::MatrixXd::Zero(nc, nc);
  for (int i = 0; i < nm; ++i)
    for (int j = 0; j < nm; ++j)
      hs(flat[i].first, flat[j].first) += M(i, j) * M(i, j);
  return hs.cwiseSqrt();
}

}  // namespace kamnf
