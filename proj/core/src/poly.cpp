#include "kamnf/poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace kamnf {

namespace {
long next_factor_id() {
  static long counter = 0;
  return ++counter;
}
}  // namespace

FactorPtr make_vec_factor(ModeVector v) {
  auto f = std::make_shared<Factor>();
  f->kind = Factor::VEC;
  f->v = std::move(v);
  f->id = next_factor_id();
  return f;
}

FactorPtr make_quad_factor(BlockMatrix Q) {
  auto f = std::make_shared<Factor>();
  f->kind = Factor::QUAD;
  f->Q = std::move(Q);
  f->id = next_factor_id();
  return f;
}

int HighTerm::zdeg() const {
  int m = 0;
  for (const auto& f : factors) m += (f->kind == Factor::VEC) ? 1 : 2;
  return m;
}

namespace {

// mu-free bounds of a single factor: value <= b0 * mu^m, gradient norms
// g* * mu^{m-1}, quadratic Hessian norms hb / hbp (mu^0).
struct FBounds {
  double b0 = 0;   // value
  double gs = 0;   // gradient, weighted l2_s
  double gb = 0;   // gradient, cluster-sup w^beta
  double gbp = 0;  // gradient, per-mode w^{beta+1}
  double gb1 = 0;  // gradient, cluster-sup (1+w) w^beta
  double hb = 0;   // Hessian cluster norm (quadratic factors only)
  double hbp = 0;
  int m = 1;
};

double vec_beta_one(const ModeVector& z, double beta) {
  double best = 0;
  for (int i = 0; i < z.cl->n_clusters(); ++i) {
    const double w = z.cl->weight(i);
    best = std::max(best,
                    (1.0 + w) * std::pow(w, beta) * z.v[i].norm());
  }
  return best;
}

FBounds factor_bounds(const Factor& f, double s, double beta) {
  FBounds b;
  if (f.kind == Factor::VEC) {
    b.m = 1;
    b.b0 = f.v.norm_dual_s(s);
    b.gs = f.v.norm_s(s);
    b.gb = f.v.norm_beta(beta);
    b.gbp = f.v.norm_beta_plus(beta);
    b.gb1 = vec_beta_one(f.v, beta);
    return b;
  }
  b.m = 2;
  const Clustering& cl = *f.Q.cl;
  BlockMatrix M = f.Q;
  M += f.Q.transposed();  // gradient matrix
  // b0: |zeta^T Q zeta| <= ||W^-s Q W^-s||_F(blockwise) mu^2
  double acc = 0;
  for (const auto& [k, blk] : f.Q.blocks) {
    const double wa = cl.weight(k.first), wb = cl.weight(k.second);
    const double t = std::pow(wa, -s) * std::pow(wb, -s) * blk.norm();
    acc += t * t;
  }
  b.b0 = std::sqrt(acc);
  // gs: ||M zeta||_s <= ||W^s M W^-s||_F mu
  acc = 0;
  for (const auto& [k, blk] : M.blocks) {
    const double wa = cl.weight(k.first), wb = cl.weight(k.second);
    const double t = std::pow(wa, s) * std::pow(wb, -s) * blk.norm();
    acc += t * t;
  }
  b.gs = std::sqrt(acc);
  // row-wise bounds: |(M zeta)_[a]| <= sqrt(sum_b (||M_ab|| w_b^-s)^2) mu
  std::vector<double> row(cl.n_clusters(), 0.0);
  for (const auto& [k, blk] : M.blocks) {
    const double wb = cl.weight(k.second);
    const double t = std::pow(wb, -s) * blk.norm();
    row[k.first] += t * t;
  }
  for (int a = 0; a < cl.n_clusters(); ++a) {
    const double r = std::sqrt(row[a]);
    const double wa = cl.weight(a);
    b.gb = std::max(b.gb, std::pow(wa, beta) * r);
    b.gbp = std::max(b.gbp, std::pow(wa, beta + 1.0) * r);
    b.gb1 = std::max(b.gb1, (1.0 + wa) * std::pow(wa, beta) * r);
  }
  b.hb = norm_beta(M, beta);
  b.hbp = norm_beta_plus(M, beta);
  return b;
}

const FBounds& cached_bounds(const Factor& f, double s, double beta) {
  if (!f.bounds_cache || f.bounds_s != s || f.bounds_beta != beta) {
    f.bounds_cache = std::make_shared<FBounds>(factor_bounds(f, s, beta));
    f.bounds_s = s;
    f.bounds_beta = beta;
  }
  return *static_cast<const FBounds*>(f.bounds_cache.get());
}

// the seven slot contributions of one high term at (sigma, mu)
std::array<double, 7> term_slots(const HighTerm& t, double sigma, double mu,
                                 double s, double beta) {
  std::array<double, 7> out{};
  const double base =
      t.coeff.majorant_amp(sigma) * std::pow(mu, double(t.deg()));
  if (base == 0) return out;
  const size_t nf = t.factors.size();
  std::vector<const FBounds*> fbp(nf);
  for (size_t i = 0; i < nf; ++i)
    fbp[i] = &cached_bounds(*t.factors[i], s, beta);
  auto fb = [&](size_t i) -> const FBounds& { return *fbp[i]; };
  auto prod_except = [&](size_t skip1, size_t skip2) {
    double p = 1;
    for (size_t j = 0; j < nf; ++j)
      if (j != skip1 && j != skip2) p *= fb(j).b0;
    return p;
  };
  const double pall = prod_except(nf, nf);
  out[0] = base * pall;
  out[1] = base * double(t.rdeg()) * pall;
  double gs = 0, gb = 0, gbp = 0, hb = 0, hbp = 0;
  for (size_t i = 0; i < nf; ++i) {
    const double rest = prod_except(i, nf);
    gs += fb(i).gs * rest;
    gb += fb(i).gb * rest;
    gbp += fb(i).gbp * rest;
    if (fb(i).m == 2) {
      hb += fb(i).hb * rest;
      hbp += fb(i).hbp * rest;
    }
    for (size_t j = 0; j < nf; ++j) {
      if (j == i) continue;
      const double r2 = prod_except(i, j);
      hb += fb(i).gb * fb(j).gb * r2;
      hbp += (fb(i).gb1 * fb(j).gb + fb(i).gb * fb(j).gb1) * r2;
    }
  }
  out[2] = base * gs;
  out[3] = base * gb;
  out[4] = base * hb;
  out[5] = base * gbp;
  out[6] = base * hbp;
  return out;
}

double term_mass(const HighTerm& t, double sigma, double mu, double s,
                 double beta) {
  const auto sl = term_slots(t, sigma, mu, s, beta);
  return std::max({sl[0], sl[1], sl[2], sl[3], sl[4]});
}

}  // namespace

PolyHamiltonian& PolyHamiltonian::operator+=(const PolyHamiltonian& o) {
  jet += o.jet;
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  tail += o.tail;
  return *this;
}

PolyHamiltonian& PolyHamiltonian::operator*=(Cx sc) {
  jet *= sc;
  for (auto& t : terms) t.coeff *= sc;
  tail *= std::abs(sc);
  return *this;
}

Cx PolyHamiltonian::eval(const Eigen::VectorXcd& r,
                         const Eigen::VectorXcd& theta,
                         const ModeVector& zeta) const {
  Cx acc = jet.eval(r, theta, zeta);
  for (const auto& t : terms) {
    Cx v = t.coeff.eval(theta, Cx(0));
    for (int i = 0; i < jet.n; ++i)
      for (int p = 0; p < t.alpha[i]; ++p) v *= r[i];
    for (const auto& f : t.factors) {
      if (f->kind == Factor::VEC)
        v *= f->v.dot(zeta);
      else
        v *= apply(f->Q, zeta).dot(zeta);
    }
    acc += v;
  }
  return acc;
}

void PolyHamiltonian::compact(double sigma, double mu, double s, double tol) {
  // merge terms with identical (alpha, factor list)
  std::map<std::tuple<KIdx, std::vector<long>>, size_t> seen;
  std::vector<HighTerm> merged;
  for (auto& t : terms) {
    std::vector<long> fp;
    for (const auto& f : t.factors) fp.push_back(f->id);
    std::sort(fp.begin(), fp.end());
    auto key = std::make_tuple(t.alpha, std::move(fp));
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(std::move(key), merged.size());
      merged.push_back(std::move(t));
    } else {
      merged[it->second].coeff += t.coeff;
    }
  }
  terms.clear();
  const double beta_dummy = 0.25;  // mass threshold only needs beta-free slots
  for (auto& t : merged) {
    t.coeff.prune(K_max, 0.0, sigma);
    if (t.coeff.c.empty()) {
      tail += t.coeff.tail * std::pow(mu, double(t.deg()));
      continue;
    }
    const double mass = term_mass(t, sigma, mu, s, beta_dummy);
    if (mass <= tol)
      tail += mass;
    else
      terms.push_back(std::move(t));
  }
}

double poly_high_norm(const PolyHamiltonian& h, double sigma, double mu,
                      double s, double beta, bool plus) {
  std::array<double, 7> acc{};
  for (const auto& t : h.terms) {
    const auto sl = term_slots(t, sigma, mu, s, beta);
    for (int i = 0; i < 7; ++i) acc[i] += sl[i];
  }
  double v = std::max({acc[0], acc[1], acc[2], acc[3], acc[4]});
  if (plus) v += acc[5] + acc[6];
  return v;
}

double poly_norm(const PolyHamiltonian& h, double sigma, double mu, double s,
                 double beta, bool plus) {
  auto acc = jet_norm_components(h.jet, sigma, mu, s, beta);
  for (const auto& t : h.terms) {
    const auto sl = term_slots(t, sigma, mu, s, beta);
    for (int i = 0; i < 7; ++i) acc[i] += sl[i];
  }
  double v = std::max({acc[0], acc[1], acc[2], acc[3], acc[4]});
  if (plus) v += acc[5] + acc[6];
  return v;
}

SplitReport split_remainder(const PolyHamiltonian& h, double sigma, double mu,
                            double mu_prime, double s, double beta) {
  SplitReport r;
  r.jet = h.jet;
  r.remainder_norm = poly_high_norm(h, sigma, mu_prime, s, beta, false);
  r.full_norm = poly_norm(h, sigma, mu, s, beta, false);
  return r;
}

namespace {

KIdx sub_e(const KIdx& a, int i) {
  KIdx o = a;
  o[i] -= 1;
  return o;
}
KIdx add_e(const KIdx& a, int i) {
  KIdx o = a;
  o[i] += 1;
  return o;
}

// coeff series shifted by the fixed mode k and scaled
FourierSeries<Cx> shift_scale(const FourierSeries<Cx>& c, const KIdx& k, Cx sc,
                              int K_cap, double sigma) {
  FourierSeries<Cx> out;
  out.n = c.n;
  for (const auto& [kk, x] : c.c) {
    KIdx kn = kadd(kk, k);
    const Cx y = x * sc;
    if (l1(kn) > K_cap)
      out.tail += std::abs(y) * std::exp(sigma * l1(kn));
    else
      out.add(kn, y);
  }
  return out;
}

struct Sink {
  PolyHamiltonian* out;
  double sigma, mu, s, drop_tol;
  // deg <= 2 outputs repeat the same factor pair across many input terms and
  // Fourier modes; folding each occurrence into the jet rebuilds and adds a
  // dense block matrix every time. Accumulate the scalar coefficient series
  // per distinct pair here and materialize each matrix once in flush().
  struct PairAcc {
    FactorPtr f0, f1;  // f1 empty: single quadratic factor
    FourierSeries<Cx> coeff;
  };
  std::map<std::pair<long, long>, PairAcc> zz_acc;
  std::map<long, PairAcc> z_acc;  // m == 1 (linear-in-zeta) outputs

  void push(HighTerm&& t) {
    if (t.coeff.c.empty()) {
      out->tail += t.coeff.tail;
      return;
    }
    const int d = t.deg();
    if (d <= 2) {
      fold_jet(t);
      out->tail += t.coeff.tail;
      return;
    }
    if (d > out->D_max || term_mass(t, sigma, mu, s, 0.25) <= drop_tol) {
      out->tail += term_mass(t, sigma, mu, s, 0.25) + t.coeff.tail;
      return;
    }
    out->tail += t.coeff.tail;
    t.coeff.tail = 0;
    out->terms.push_back(std::move(t));
  }

  void fold_jet(const HighTerm& t) {
    Jet& j = out->jet;
    const int m = t.zdeg(), ra = t.rdeg();
    if (ra == 0 && m == 0) {
      for (const auto& [k, x] : t.coeff.c) j.ftheta.add(k, x);
      return;
    }
    if (ra == 1 && m == 0) {
      int idx = 0;
      for (int i = 0; i < 4; ++i)
        if (t.alpha[i] == 1) idx = i;
      for (const auto& [k, x] : t.coeff.c) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(j.n);
        v[idx] = x;
        j.fr.add(k, std::move(v));
      }
      return;
    }
    if (ra == 0 && m == 1) {
      PairAcc& a = z_acc[t.factors[0]->id];
      if (!a.f0) {
        a.f0 = t.factors[0];
        a.coeff.n = t.coeff.n;
      }
      for (const auto& [k, x] : t.coeff.c) a.coeff.add(k, x);
      return;
    }
    // ra == 0, m == 2: value = <u,z><v,z> or z^T Q z; jet stores 1/2 <Mz,z>
    long i0 = t.factors[0]->id;
    long i1 = t.factors.size() == 2 ? t.factors[1]->id : 0;
    if (i1 && i1 < i0) std::swap(i0, i1);
    PairAcc& a = zz_acc[{i0, i1}];
    if (!a.f0) {
      a.f0 = t.factors[0];
      if (t.factors.size() == 2) a.f1 = t.factors[1];
      a.coeff.n = t.coeff.n;
    }
    for (const auto& [k, x] : t.coeff.c) a.coeff.add(k, x);
  }

  void flush() {
    Jet& j = out->jet;
    for (auto& [key, a] : z_acc)
      for (const auto& [k, x] : a.coeff.c) {
        ModeVector y = a.f0->v;
        y *= x;
        j.fzeta.add(k, std::move(y));
      }
    z_acc.clear();
    if (zz_acc.empty()) return;

    // regroup by Fourier mode: the rank-2 contributions at a fixed k are
    //   sum_p x_p (u_p v_p^T + v_p u_p^T) = W + W^T,  W = U diag(x) V^T,
    // one dense product per mode instead of one block-matrix add per
    // (pair, mode) occurrence
    const Clustering& cl = *j.cl;
    const int nc = cl.n_clusters();
    std::vector<int> off(nc + 1, 0);
    for (int i = 0; i < nc; ++i) off[i + 1] = off[i] + 2 * cl.levels[i].dim();
    const int dim = off[nc];

    std::map<long, Eigen::VectorXcd> flat;  // flat copy per VEC factor id
    auto flat_of = [&](const FactorPtr& f) -> const Eigen::VectorXcd& {
      auto it = flat.find(f->id);
      if (it == flat.end()) {
        Eigen::VectorXcd v(dim);
        for (int i = 0; i < nc; ++i)
          v.segment(off[i], off[i + 1] - off[i]) = f->v.v[i];
        it = flat.emplace(f->id, std::move(v)).first;
      }
      return it->second;
    };
    std::map<long, Eigen::MatrixXcd> qdense;  // Q + Q^T per QUAD factor id
    auto qdense_of = [&](const FactorPtr& f) -> const Eigen::MatrixXcd& {
      auto it = qdense.find(f->id);
      if (it == qdense.end()) {
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dim, dim);
        for (const auto& [ab, blk] : f->Q.blocks)
          M.block(off[ab.first], off[ab.second], blk.rows(), blk.cols()) +=
              blk;
        Eigen::MatrixXcd Ms = M + M.transpose();
        it = qdense.emplace(f->id, std::move(Ms)).first;
      }
      return it->second;
    };

    struct KGroup {
      std::vector<Cx> x;
      std::vector<const Eigen::VectorXcd*> u, v;
      Eigen::MatrixXcd quad;  // direct contributions of single QUAD factors
    };
    std::map<KIdx, KGroup> groups;
    for (auto& [key, a] : zz_acc) {
      if (a.f1) {
        const Eigen::VectorXcd& fu = flat_of(a.f0);
        const Eigen::VectorXcd& fv = flat_of(a.f1);
        for (const auto& [k, x] : a.coeff.c) {
          KGroup& g = groups[k];
          g.x.push_back(x);
          g.u.push_back(&fu);
          g.v.push_back(&fv);
        }
      } else {
        const Eigen::MatrixXcd& Ms = qdense_of(a.f0);
        for (const auto& [k, x] : a.coeff.c) {
          KGroup& g = groups[k];
          if (g.quad.size() == 0)
            g.quad = Eigen::MatrixXcd::Zero(dim, dim);
          g.quad += x * Ms;
        }
      }
    }
    zz_acc.clear();

    for (auto& [k, g] : groups) {
      Eigen::MatrixXcd acc;
      if (!g.x.empty()) {
        const int P = int(g.x.size());
        Eigen::MatrixXcd U(dim, P), V(dim, P);
        for (int p = 0; p < P; ++p) {
          U.col(p) = g.x[p] * (*g.u[p]);
          V.col(p) = *g.v[p];
        }
        Eigen::MatrixXcd W = U * V.transpose();
        acc = W + W.transpose();
      } else {
        acc = Eigen::MatrixXcd::Zero(dim, dim);
      }
      if (g.quad.size() != 0) acc += g.quad;

      BlockMatrix B(cl, true);
      for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b) {
          auto blk = acc.block(off[a], off[b], off[a + 1] - off[a],
                               off[b + 1] - off[b]);
          if (blk.isZero(0)) continue;
          B.blocks[{a, b}] = blk;
        }
      j.fzz.add(k, std::move(B));
    }
  }
};

}  // namespace

PolyHamiltonian poisson(const Jet& S, const PolyHamiltonian& h, double sigma,
                        double mu, double s, double drop_tol) {
  const Clustering& cl = *h.jet.cl;
  PolyHamiltonian out(h.jet.n, cl);
  out.D_max = h.D_max;
  out.K_max = h.K_max;
  const int K_cap = h.K_max;
  out.jet = poisson_jet(S, h.jet, K_cap, sigma);

  Sink sink{&out, sigma, mu, s, drop_tol};
  const int n = h.jet.n;

  // precompute J Szeta and J-conjugated Szz coefficients
  std::vector<std::pair<KIdx, ModeVector>> JSz;
  for (const auto& [k, v] : S.fzeta.c) JSz.emplace_back(k, v.applied_J());

  // output factors depend only on (input factor, S coefficient); memoizing
  // them shares the resulting FactorPtrs across terms so compact() can merge
  std::map<std::pair<const Factor*, const void*>, FactorPtr> fcache;
  auto cached = [&](const Factor* f, const void* sc, auto&& make) {
    auto it = fcache.find({f, sc});
    if (it == fcache.end())
      it = fcache.emplace(std::make_pair(f, sc), make()).first;
    return it->second;
  };
  std::map<const Factor*, ModeVector> jfv_cache;       // J f.v (VEC)
  std::map<const Factor*, BlockMatrix> msym_cache;     // Q + Q^T (QUAD)
  std::map<const Factor*, BlockMatrix> jmsym_cache;    // J (Q + Q^T)

  for (const auto& T : h.terms) {
    // grad_r S . grad_theta T  (theta-dependence of T lives in the coeff)
    {
      HighTerm t;
      t.alpha = T.alpha;
      t.factors = T.factors;
      t.coeff = directional_conv(S.fr, T.coeff, K_cap, sigma);
      sink.push(std::move(t));
    }
    // - grad_theta S . grad_r T
    for (int i = 0; i < n; ++i) {
      if (T.alpha[i] == 0) continue;
      const Cx ai(-double(T.alpha[i]), 0);
      const KIdx al = sub_e(T.alpha, i);
      // d_i S_theta
      {
        HighTerm t;
        t.alpha = al;
        t.factors = T.factors;
        t.coeff = conv(S.ftheta.derivative(i), T.coeff, K_cap, sigma);
        t.coeff *= ai;
        sink.push(std::move(t));
      }
      // <d_i S_r, r>
      for (const auto& [k, v] : S.fr.c) {
        if (k[i] == 0) continue;
        for (int jdx = 0; jdx < n; ++jdx) {
          if (v[jdx] == Cx(0)) continue;
          HighTerm t;
          t.alpha = add_e(al, jdx);
          t.factors = T.factors;
          t.coeff =
              shift_scale(T.coeff, k, ai * Cx(0, k[i]) * v[jdx], K_cap, sigma);
          sink.push(std::move(t));
        }
      }
      // <d_i S_zeta, zeta>
      for (const auto& [k, v] : S.fzeta.c) {
        if (k[i] == 0) continue;
        HighTerm t;
        t.alpha = al;
        t.factors = T.factors;
        t.factors.push_back(
            cached(nullptr, &v, [&] { return make_vec_factor(v); }));
        t.coeff = shift_scale(T.coeff, k, ai * Cx(0, k[i]), K_cap, sigma);
        sink.push(std::move(t));
      }
      // 1/2 <d_i S_zz zeta, zeta>
      for (const auto& [k, M] : S.fzz.c) {
        if (k[i] == 0) continue;
        HighTerm t;
        t.alpha = al;
        t.factors = T.factors;
        t.factors.push_back(cached(nullptr, &M, [&] {
          BlockMatrix Q = M;
          Q *= Cx(0.5);
          return make_quad_factor(std::move(Q));
        }));
        t.coeff = shift_scale(T.coeff, k, ai * Cx(0, k[i]), K_cap, sigma);
        sink.push(std::move(t));
      }
    }
    // <J grad_zeta S, grad_zeta T>
    for (size_t fi = 0; fi < T.factors.size(); ++fi) {
      std::vector<FactorPtr> rest;
      for (size_t j = 0; j < T.factors.size(); ++j)
        if (j != fi) rest.push_back(T.factors[j]);
      const Factor& F = *T.factors[fi];
      if (F.kind == Factor::VEC) {
        for (const auto& [k, Jv] : JSz) {
          HighTerm t;
          t.alpha = T.alpha;
          t.factors = rest;
          t.coeff = shift_scale(T.coeff, k, Jv.dot(F.v), K_cap, sigma);
          sink.push(std::move(t));
        }
        if (!S.fzz.c.empty()) {
          auto jit = jfv_cache.find(&F);
          if (jit == jfv_cache.end())
            jit = jfv_cache.emplace(&F, F.v.applied_J()).first;
          const ModeVector& JFv = jit->second;
          for (const auto& [k, M] : S.fzz.c) {
            // <J M zeta, v> = -(M J v) . zeta
            FactorPtr nf2 = cached(&F, &M, [&] {
              ModeVector u = apply(M, JFv);
              u *= Cx(-1);
              return make_vec_factor(std::move(u));
            });
            HighTerm t;
            t.alpha = T.alpha;
            t.factors = rest;
            t.factors.push_back(std::move(nf2));
            t.coeff = shift_scale(T.coeff, k, Cx(1), K_cap, sigma);
            sink.push(std::move(t));
          }
        }
      } else {
        auto mit = msym_cache.find(&F);
        if (mit == msym_cache.end()) {
          BlockMatrix Msym = F.Q;
          Msym += F.Q.transposed();
          jmsym_cache.emplace(&F, J_left(Msym));
          mit = msym_cache.emplace(&F, std::move(Msym)).first;
        }
        const BlockMatrix& Msym = mit->second;
        const BlockMatrix& JMsym = jmsym_cache.at(&F);
        for (const auto& [k, Jv] : JSz) {
          // <J S_z, Msym zeta> = (Msym J S_z) . zeta
          FactorPtr nf2 = cached(
              &F, &Jv, [&] { return make_vec_factor(apply(Msym, Jv)); });
          HighTerm t;
          t.alpha = T.alpha;
          t.factors = rest;
          t.factors.push_back(std::move(nf2));
          t.coeff = shift_scale(T.coeff, k, Cx(1), K_cap, sigma);
          sink.push(std::move(t));
        }
        for (const auto& [k, M] : S.fzz.c) {
          // <J M zeta, Msym zeta> = - zeta^T (M J Msym) zeta
          FactorPtr nf2 = cached(&F, &M, [&] {
            BlockMatrix Q = mul(M, JMsym);
            Q *= Cx(-1);
            return make_quad_factor(std::move(Q));
          });
          HighTerm t;
          t.alpha = T.alpha;
          t.factors = rest;
          t.factors.push_back(std::move(nf2));
          t.coeff = shift_scale(T.coeff, k, Cx(1), K_cap, sigma);
          sink.push(std::move(t));
        }
      }
    }
  }
  sink.flush();
  out.compact(sigma, mu, s, drop_tol);
  return out;
}

PolyHamiltonian pullback(const PolyHamiltonian& h, const Jet& S, int M_lie,
                         double sigma, double mu, double s, double beta,
                         double tol_abs, double drop_tol, double t_scale) {
  PolyHamiltonian acc = h;
  PolyHamiltonian cur = h;
  double fac = 1;
  for (int m = 1; m <= M_lie; ++m) {
    cur = poisson(S, cur, sigma, mu, s, drop_tol);
    fac *= t_scale / double(m);
    PolyHamiltonian piece = cur;
    piece *= Cx(fac, 0);
    const double sz = poly_norm(piece, sigma, mu, s, beta, false);
    if (sz <= tol_abs) {
      acc.tail += sz;
      break;
    }
    acc += piece;
    if (m == M_lie) acc.tail += sz;  // crude remainder charge
  }
  return acc;
}

}  // namespace kamnf
