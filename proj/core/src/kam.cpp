#include "kamnf/kam.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "kamnf/quadrature.hpp"

namespace kamnf {

Schedule::Schedule(double eps0_, double sigma0_, double mu0_, int n_)
    : eps0(eps0_), sigma0(sigma0_), mu0(mu0_), n(n_) {
  const double pi = std::acos(-1.0);
  Cstar = 3.0 / (pi * pi);  // (2 sum_{j>=1} j^-2)^-1
  delta0 = std::pow(eps0, 0.25);
  kappa0 = std::cbrt(eps0);
}

double Schedule::gap(int j) const { return Cstar * sigma0 / (double(j) * j); }

double Schedule::sigma(int j) const {
  double s = sigma0;
  for (int i = 1; i <= j; ++i) s -= gap(i);
  return s;
}

double Schedule::mu(int j, double eps_prev) const {
  return j == 0 ? mu0 : std::pow(eps_prev, 0.4) * mu0;
}

double Schedule::kappa(int j, double eps_j) const {
  return j == 0 ? kappa0 : std::pow(eps_j, 1.0 / 64.0);
}

int Schedule::N(int j, double eps_pred) const {
  double v = std::log(1.0 / eps_pred) / gap(j);
  return std::max(1, int(std::ceil(v)));
}

double predicted_epsilon(double eps_prev, double eps_cur, const Schedule& sch,
                         int j, double C) {
  if (eps_cur == 0) return 0;
  const double n = sch.n;
  double t1 = 0.5 * eps_cur * std::pow(double(j + 1), 2 * n) *
              std::pow(sch.sigma0, -n);
  double t2 = std::pow(eps_cur / eps_prev, 1.2);
  double t3 = std::pow(double(j + 1), 2 * (n + 1)) *
              std::pow(sch.sigma0, -n - 1) / (sch.mu0 * sch.mu0) *
              std::pow(eps_cur, 0.2 - 1.0 / 32.0);
  return C * (t1 + t2 + t3) * eps_cur;
}

KamState kam_init(const NormalFormHam& h0, PolyHamiltonian f0,
                  const Schedule& sch, const KamParams& p) {
  KamState st;
  st.h = h0;
  st.h0 = h0;
  st.f = std::move(f0);
  st.mu_cur = sch.mu0;
  st.eps = jet_norm(st.f.jet, sch.sigma0, sch.mu0, p.s, p.beta, false);
  st.eps_prev = st.eps;
  return st;
}

namespace {

double flow_displacement(const Jet& S, double gap, double mu, double sigma,
                         const KamParams& p) {
  try {
    FlowMap phi = build_flow(S, 1.0, gap, 0.5 * mu, sigma, mu, p.s, p.beta,
                             /*fit_series=*/false);
    double disp = 0;
    const int n = S.n;
    for (int q = 0; q < 4; ++q) {
      Point x;
      x.r = Eigen::VectorXcd::Zero(n);
      x.theta = Eigen::VectorXcd::Zero(n);
      for (int i = 0; i < n; ++i)
        x.theta[i] = Cx(std::cos(1.7 * (q + 1) + 0.3 * i), 0);
      x.zeta = ModeVector(*S.cl);
      Point y = transport(phi, x);
      double d = (y.theta - x.theta).cwiseAbs().maxCoeff();
      d = std::max(d, y.r.cwiseAbs().maxCoeff());
      d = std::max(d, y.zeta.max_abs());
      disp = std::max(disp, d);
    }
    return disp;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

bool kam_step(KamState& st, const Schedule& sch, const KamParams& p,
              std::string* why) {
  const int j = st.j;
  const double sigma = sch.sigma(j);
  const double sigma_next = sch.sigma(j + 1);
  const double gap = sigma - sigma_next;
  const double kappa = p.kappa_fixed > 0
                           ? p.kappa_fixed
                           : (j == 0 ? sch.kappa0
                                     : std::pow(st.eps, p.kappa_exp));
  const double pred = j == 0
                          ? std::pow(st.eps, 7.0 / 6.0)
                          : predicted_epsilon(st.eps_prev, st.eps, sch, j,
                                              p.pred_C);
  const int N = sch.N(j + 1, std::max(pred, 1e-300));
  const double drop_tol = p.drop_rel * std::max(st.eps, 1e-300);
  const double lie_tol = p.lie_rel * std::max(st.eps, 1e-300);

  StepLog lg;
  lg.j = j;
  lg.eps_before = st.eps;
  lg.predicted = pred;

  HomoSolution sol = solve_homological(st.f.jet, st.h, kappa, N, sigma,
                                       sigma_next);
  lg.audit = sol.audit;
  if (sol.audit.any_excluded()) {
    st.log.push_back(std::move(lg));
    if (why) *why = "excluded";
    return false;
  }

  lg.S_norm = jet_norm(sol.S, sigma, st.mu_cur, p.s, p.beta, false);
  lg.smallness_bound = st.mu_cur * st.mu_cur * gap / 16.0;
  if (lg.S_norm > lg.smallness_bound) {
    st.log.push_back(std::move(lg));
    if (why) *why = "smallness";
    return false;
  }

  const double mu_next = sch.mu(j + 1, st.eps);

  // hhat + R as a jet
  const KIdx k0{0, 0, 0, 0};
  Jet hhatR = sol.R;
  if (sol.c != Cx(0)) hhatR.ftheta.add(k0, sol.c);
  if (sol.chi.size() && sol.chi.cwiseAbs().maxCoeff() > 0)
    hhatR.fr.add(k0, sol.chi);
  if (!sol.B.blocks.empty()) hhatR.fzz.add(k0, sol.B);

  // f+ = R + (f - f^T) o Phi^1 + sum_i w_i {g_ti, S} o Phi^ti
  PolyHamiltonian fplus(sol.R);
  fplus.D_max = st.f.D_max;
  fplus.K_max = st.f.K_max;

  PolyHamiltonian fhigh = st.f;
  fhigh.jet = Jet(st.f.jet.n, *st.f.jet.cl);
#ifdef KAMNF_TIMING
  auto tt0 = std::chrono::steady_clock::now();
  auto lap = [&tt0](const char* tag, size_t nt) {
    auto t1 = std::chrono::steady_clock::now();
    fprintf(stderr, "[timing] %s: %.1fs terms=%zu\n", tag,
            std::chrono::duration<double>(t1 - tt0).count(), nt);
    tt0 = t1;
  };
  lap("solve", st.f.terms.size());
#endif
  fplus += pullback(fhigh, sol.S, p.M_lie, sigma_next, mu_next, p.s, p.beta,
                    lie_tol, drop_tol);
#ifdef KAMNF_TIMING
  lap("pullback_high", fplus.terms.size());
#endif

  // sum_i w_i pullback({g_ti, S}, S, ti) with g_t = (1-t)(hhat+R) + t f^T.
  // The bracket and the Lie series are linear in g, so instead of one
  // pullback per node, take two ad_S ladders (one per endpoint) and weight
  // term m by the scalar node sums sum_i w_i (1-ti) ti^m and sum_i w_i
  // ti^{m+1}; identical quadrature, a fraction of the brackets.
  {
    QuadRule gl = gauss_legendre(p.gl_nodes);
    std::vector<double> c0(p.M_lie + 1, 0.0), c1(p.M_lie + 1, 0.0);
    for (int i = 0; i < p.gl_nodes; ++i) {
      const double t = 0.5 * (gl.x[i] + 1.0);
      const double w = 0.5 * gl.w[i];
      double tm = 1.0;
      for (int m = 0; m <= p.M_lie; ++m) {
        c0[m] += w * (1.0 - t) * tm;
        c1[m] += w * t * tm;
        tm *= t;
      }
    }
    auto ladder = [&](const Jet& g, const std::vector<double>& cm) {
      PolyHamiltonian cur =
          poisson(sol.S, PolyHamiltonian(g), sigma_next, mu_next, p.s,
                  drop_tol);
      cur *= Cx(-1);  // {g, S} = -{S, g}
      cur.D_max = st.f.D_max;
      cur.K_max = st.f.K_max;
      double fac = 1.0;
      for (int m = 0; m <= p.M_lie; ++m) {
        if (m > 0) {
          cur = poisson(sol.S, cur, sigma_next, mu_next, p.s, drop_tol);
          fac /= double(m);
        }
        PolyHamiltonian piece = cur;
        piece *= Cx(cm[m] * fac);
        const double sz =
            poly_norm(piece, sigma_next, mu_next, p.s, p.beta, false);
        if (m > 0 && sz <= lie_tol) {  // the m = 0 bracket is always kept
          fplus.tail += sz;
          break;
        }
        fplus += piece;
        if (m == p.M_lie) fplus.tail += sz;  // crude remainder charge
      }
    };
    ladder(hhatR, c0);
    ladder(st.f.jet, c1);
  }
#ifdef KAMNF_TIMING
  lap("gl_loop", fplus.terms.size());
#endif
  fplus.compact(sigma_next, mu_next, p.s, drop_tol);
#ifdef KAMNF_TIMING
  lap("compact", fplus.terms.size());
#endif
  fplus.jet.symmetrize_real();

  // h+ = h + hhat
  st.h.omega += sol.chi.real();
  if (!sol.B.blocks.empty()) {
    BlockMatrix b = sol.B;
    for (auto& [ab, m] : b.blocks) m = m.real().cast<Cx>();
    st.h.A += b;
  }

  lg.phi_disp = flow_displacement(sol.S, gap, st.mu_cur, sigma, p);
  lg.S = sol.S;

  st.eps_prev = st.eps;
  st.eps = jet_norm(fplus.jet, sigma_next, mu_next, p.s, p.beta, false);
  st.f = std::move(fplus);
  st.mu_cur = mu_next;
  st.j = j + 1;
  lg.eps_after = st.eps;
  st.log.push_back(std::move(lg));

  // drift guards
  double wdrift = (st.h.omega - st.h0.omega).cwiseAbs().maxCoeff();
  BlockMatrix dA = st.h.A;
  BlockMatrix a0 = st.h0.A;
  a0 *= Cx(-1);
  dA += a0;
  double adrift = norm_beta(dA, p.beta);
  if (wdrift > sch.delta0 || adrift > 0.25 * sch.delta0) {
    if (why) *why = "drift";
    return false;
  }
  return true;
}

std::string ConvergenceReport::to_json() const {
  nlohmann::json j;
  j["eps"] = eps;
  j["omega_drift"] = omega_drift;
  j["A_drift"] = A_drift;
  j["phi_disp"] = phi_disp;
  j["exponents"] = exponents;
  j["status"] = status;
  j["steps"] = steps;
  if (!detail.empty()) j["detail"] = detail;
  return j.dump(2);
}

ConvergenceReport run(const NormalFormHam& h0, PolyHamiltonian f0,
                      const Schedule& sch, const KamParams& p) {
  ConvergenceReport rep;
  KamState st = kam_init(h0, std::move(f0), sch, p);
  rep.eps.push_back(st.eps);
  rep.omega_drift.push_back(0);
  rep.A_drift.push_back(0);
  rep.status = "maxiter";

  if (st.eps < p.tol || st.eps == 0) {
    rep.status = "converged";
    return rep;
  }

  for (int j = 0; j < p.J_max; ++j) {
    std::string why;
    bool ok = kam_step(st, sch, p, &why);
    if (!ok) {
      rep.status = (why == "excluded") ? "excluded" : "budget";
      std::ostringstream os;
      os << why << " at step " << j;
      rep.detail = os.str();
      break;
    }
    rep.eps.push_back(st.eps);
    rep.phi_disp.push_back(st.log.back().phi_disp);
    rep.omega_drift.push_back(
        (st.h.omega - st.h0.omega).cwiseAbs().maxCoeff());
    BlockMatrix dA = st.h.A;
    BlockMatrix a0 = st.h0.A;
    a0 *= Cx(-1);
    dA += a0;
    rep.A_drift.push_back(norm_beta(dA, p.beta));
    if (st.eps < p.tol) {
      rep.status = "converged";
      break;
    }
  }
  rep.steps = st.j;
  for (size_t i = 0; i + 1 < rep.eps.size(); ++i) {
    double a = std::log(rep.eps[i]), b = std::log(rep.eps[i + 1]);
    rep.exponents.push_back(a != 0 ? b / a : 0.0);
  }
  return rep;
}

}  // namespace kamnf
