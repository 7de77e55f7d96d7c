#include "lma/socp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "lma/errors.hpp"

namespace lma {
namespace {

// Each cone is Q^7 = {(g, r) : ||r|| <= g}, g first.
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr double kStepFraction = 0.99;

// sqrt(u0^2 - ||u1||^2); negative value signals u is not interior.
double cone_norm(const Vec7& u) {
  const double r = u.tail<6>().norm();
  const double d = (u(0) - r) * (u(0) + r);
  return d > 0.0 && u(0) > 0.0 ? std::sqrt(d) : -1.0;
}

// Jordan product of the second-order cone.
Vec7 circ(const Vec7& u, const Vec7& v) {
  Vec7 out;
  out(0) = u.dot(v);
  out.tail<6>() = u(0) * v.tail<6>() + v(0) * u.tail<6>();
  return out;
}

// Solves lambda o x = r.
Vec7 jordan_div(const Vec7& lambda, const Vec7& r) {
  const double l0 = lambda(0);
  const auto l1 = lambda.tail<6>();
  Vec7 x;
  x(0) = (l0 * r(0) - l1.dot(r.tail<6>())) / ((l0 - l1.norm()) * (l0 + l1.norm()));
  x.tail<6>() = (r.tail<6>() - x(0) * l1) / l0;
  return x;
}

// Largest alpha >= 0 keeping u + alpha d in the cone (u interior).
double max_step(const Vec7& u, const Vec7& d) {
  const double un = u.tail<6>().norm();
  const double a = d(0) * d(0) - d.tail<6>().squaredNorm();
  const double bh = u(0) * d(0) - u.tail<6>().dot(d.tail<6>());
  const double c = (u(0) - un) * (u(0) + un);
  const double disc = bh * bh - a * c;
  if (a < 0.0 || (bh < 0.0 && disc >= 0.0)) {
    const double denom = -bh + std::sqrt(std::max(disc, 0.0));
    return denom > 0.0 ? c / denom : std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

struct Scaling {
  Mat7 w;
  Mat7 w_inv;
  Mat7 h;  // W^-2
  Vec7 lambda;
};

bool nt_scaling(const Vec7& s, const Vec7& z, Scaling& out) {
  const double sn = cone_norm(s);
  const double zn = cone_norm(z);
  if (!(sn > 0.0) || !(zn > 0.0)) return false;
  const Vec7 sb = s / sn;
  Vec7 jzb = z / zn;
  const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(jzb)));
  jzb.tail<6>() = -jzb.tail<6>();
  const Vec7 wb = (sb + jzb) / (2.0 * gamma);  // scaled NT point, wb' J wb = 1
  const double beta = std::sqrt(sn / zn);
  Vec7 v = wb;
  v(0) += 1.0;
  v /= std::sqrt(2.0 * (wb(0) + 1.0));

  Mat7 j = Mat7::Identity();
  j.bottomRightCorner<6, 6>() = -Mat6::Identity();
  const Vec7 jv = j * v;
  out.w = beta * (2.0 * v * v.transpose() - j);
  out.w_inv = (2.0 * jv * jv.transpose() - j) / beta;
  out.h = out.w_inv * out.w_inv;
  out.lambda = out.w * z;
  return out.lambda.allFinite() && out.h.allFinite();
}

// Unit-scale copy of the problem shared by the interior-point phase and the
// active-set polish.
struct Scaled {
  Eigen::Index dim = 0;
  std::size_t nodes = 0;
  std::size_t anchor = 0;
  std::vector<std::size_t> ni, nj;
  std::vector<std::ptrdiff_t> oi, oj;
  std::vector<Vec6> b;
  std::vector<double> v;

  std::size_t cones() const { return b.size(); }

  Vec6 apply(std::size_t e, const Eigen::VectorXd& x) const {
    Vec6 r = Vec6::Zero();
    if (oj[e] >= 0) r += x.segment<6>(oj[e]);
    if (oi[e] >= 0) r -= x.segment<6>(oi[e]);
    return r;
  }
  void scatter(std::size_t e, const Vec6& g, Eigen::VectorXd& out) const {
    if (oj[e] >= 0) out.segment<6>(oj[e]) += g;
    if (oi[e] >= 0) out.segment<6>(oi[e]) -= g;
  }
  double objective(const Eigen::VectorXd& x) const {
    double f = 0.0;
    for (std::size_t e = 0; e < cones(); ++e) f += v[e] * (b[e] + apply(e, x)).norm();
    return f;
  }
};

struct Certificate {
  double gap = std::numeric_limits<double>::infinity();
  double dres = std::numeric_limits<double>::infinity();
  double measure() const { return std::max(gap, dres); }
};

// Weak duality: for ||g_e|| <= v_e with sum_e A_e^T g_e = 0, f(x) >= sum g_e.b_e.
// The multipliers are clipped into their balls before use.
Certificate certify(const Scaled& p, const Eigen::VectorXd& x, std::vector<Vec6>& g) {
  Eigen::VectorXd agg = Eigen::VectorXd::Zero(p.dim);
  double lower = 0.0;
  for (std::size_t e = 0; e < p.cones(); ++e) {
    if (const double gn = g[e].norm(); gn > p.v[e]) g[e] *= p.v[e] / gn;
    p.scatter(e, g[e], agg);
    lower += p.b[e].dot(g[e]);
  }
  const double f = p.objective(x);
  const double scale = std::max(1.0, f);
  return {(f - lower) / scale, agg.norm() / scale};
}

struct IpmResult {
  Eigen::VectorXd x;
  std::vector<Vec6> g;
  Certificate cert;
  int iterations = 0;
  bool hit_limit = false;
};

struct Direction {
  Eigen::VectorXd dx;
  Eigen::VectorXd dt;
  std::vector<Vec7> ds;
  std::vector<Vec7> dy;
};

class SumOfNormsIpm {
 public:
  explicit SumOfNormsIpm(const Scaled& p) : p_(p), n_(p.dim), m_(p.cones()) {}

  IpmResult run(double tol, int max_iter);

 private:
  bool factor(const std::vector<Scaling>& sc);
  Direction solve(const std::vector<Scaling>& sc, const std::vector<Vec7>& d) const;
  Direction solve_once(const std::vector<Scaling>& sc, const std::vector<Vec7>& d,
                       const std::vector<Vec7>& rp, const Eigen::VectorXd& rdx,
                       const Eigen::VectorXd& rdt) const;

  const Scaled& p_;
  Eigen::Index n_;
  std::size_t m_;

  // Iterate.
  Eigen::VectorXd x_, t_;
  std::vector<Vec7> s_, y_;
  // Residuals of G z + s = h and G^T y + c = 0.
  std::vector<Vec7> rp_;
  Eigen::VectorXd rdx_, rdt_;

  Eigen::MatrixXd k_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool use_ldlt_ = false;
};

bool SumOfNormsIpm::factor(const std::vector<Scaling>& sc) {
  k_.setZero(n_, n_);
  for (std::size_t e = 0; e < m_; ++e) {
    // Schur complement of h00 in W^-2, taken as the inverse of the lower block
    // of W^2 to avoid cancellation near the cone boundary.
    const Mat7 w2 = sc[e].w * sc[e].w;
    const Mat6 blk = w2.bottomRightCorner<6, 6>().ldlt().solve(Mat6::Identity());
    const auto i = p_.oi[e], j = p_.oj[e];
    if (i >= 0) k_.block<6, 6>(i, i) += blk;
    if (j >= 0) k_.block<6, 6>(j, j) += blk;
    if (i >= 0 && j >= 0) {
      k_.block<6, 6>(i, j) -= blk;
      k_.block<6, 6>(j, i) -= blk;
    }
  }
  if (!k_.allFinite()) return false;
  llt_.compute(k_);
  use_ldlt_ = llt_.info() != Eigen::Success;
  if (use_ldlt_) {
    ldlt_.compute(k_);
    return ldlt_.info() == Eigen::Success;
  }
  return true;
}

// Newton system with NT scaling W:
//   G^T dy = -rd,  G dz + ds = -rp,  W^-1 ds + W dy = d.
// t-blocks are eliminated per cone, leaving K dx = rhs.
Direction SumOfNormsIpm::solve_once(const std::vector<Scaling>& sc, const std::vector<Vec7>& d,
                                     const std::vector<Vec7>& rp, const Eigen::VectorXd& rdx,
                                     const Eigen::VectorXd& rdt) const {
  std::vector<Vec7> q(m_);
  Eigen::VectorXd rhs = -rdx;
  for (std::size_t e = 0; e < m_; ++e) {
    const Mat7& h = sc[e].h;
    q[e] = h * (sc[e].w * d[e] + rp[e]);
    const Vec6 g = q[e].tail<6>() - h.bottomLeftCorner<6, 1>() * (q[e](0) - rdt(e)) / h(0, 0);
    p_.scatter(e, g, rhs);
  }
  Direction dir;
  dir.dx = use_ldlt_ ? Eigen::VectorXd(ldlt_.solve(rhs)) : Eigen::VectorXd(llt_.solve(rhs));
  dir.dt.resize(static_cast<Eigen::Index>(m_));
  dir.ds.resize(m_);
  dir.dy.resize(m_);
  for (std::size_t e = 0; e < m_; ++e) {
    const Mat7& h = sc[e].h;
    const Vec6 adx = p_.apply(e, dir.dx);
    const double dt = (q[e](0) - h.bottomLeftCorner<6, 1>().dot(adx) - rdt(e)) / h(0, 0);
    dir.dt(e) = dt;
    Vec7 gdz;
    gdz(0) = dt;
    gdz.tail<6>() = adx;
    dir.dy[e] = q[e] - h * gdz;
    dir.ds[e] = sc[e].w * (d[e] - sc[e].w * dir.dy[e]);
  }
  return dir;
}

// The reduced matrix is assembled from W^2 while the back substitution uses
// W^-2; near the cone boundary the two disagree in the last digits, so the
// direction is refined against the unreduced system.
Direction SumOfNormsIpm::solve(const std::vector<Scaling>& sc, const std::vector<Vec7>& d) const {
  Direction dir = solve_once(sc, d, rp_, rdx_, rdt_);
  std::vector<Vec7> r2(m_), r3(m_);
  Eigen::VectorXd r1x(n_), r1t(static_cast<Eigen::Index>(m_));
  for (int pass = 0; pass < 2; ++pass) {
    r1x = rdx_;
    for (std::size_t e = 0; e < m_; ++e) {
      p_.scatter(e, -dir.dy[e].tail<6>(), r1x);
      r1t(e) = rdt_(e) - dir.dy[e](0);
      Vec7 gdz;
      gdz(0) = dir.dt(e);
      gdz.tail<6>() = p_.apply(e, dir.dx);
      // Unreduced equations: ds - G dz = -rp and W^-1 ds + W dy = d.
      r2[e] = dir.ds[e] - gdz + rp_[e];
      r3[e] = d[e] - sc[e].w_inv * dir.ds[e] - sc[e].w * dir.dy[e];
    }
    const Direction c = solve_once(sc, r3, r2, r1x, r1t);
    if (!c.dx.allFinite()) break;
    dir.dx += c.dx;
    dir.dt += c.dt;
    for (std::size_t e = 0; e < m_; ++e) {
      dir.ds[e] += c.ds[e];
      dir.dy[e] += c.dy[e];
    }
  }
  return dir;
}

IpmResult SumOfNormsIpm::run(double tol, int max_iter) {
  const Eigen::Index m = static_cast<Eigen::Index>(m_);
  x_ = Eigen::VectorXd::Zero(n_);
  t_.resize(m);
  s_.resize(m_);
  y_.resize(m_);
  rp_.resize(m_);
  for (std::size_t e = 0; e < m_; ++e) {
    t_(e) = p_.b[e].norm() + 1.0;
    s_[e] << t_(e), p_.b[e];
    y_[e] << 1.0, Vec6::Zero();
  }

  IpmResult best;
  std::vector<Scaling> sc(m_);
  std::vector<Vec7> d(m_);
  std::vector<Vec6> g(m_);
  for (int it = 0;; ++it) {
    rdx_ = Eigen::VectorXd::Zero(n_);
    rdt_.resize(m);
    double sy = 0.0;
    for (std::size_t e = 0; e < m_; ++e) {
      Vec7 gz;
      gz(0) = t_(e);
      gz.tail<6>() = p_.b[e] + p_.apply(e, x_);
      rp_[e] = s_[e] - gz;
      p_.scatter(e, -y_[e].tail<6>(), rdx_);
      rdt_(e) = p_.v[e] - y_[e](0);
      g[e] = -y_[e].tail<6>();
      sy += s_[e].dot(y_[e]);
    }
    const Certificate cert = certify(p_, x_, g);
    const double mu = sy / static_cast<double>(m_);
    if (cert.measure() < best.cert.measure()) {
      best.x = x_;
      best.g = g;
      best.cert = cert;
      best.iterations = it;
    }
    if (cert.measure() <= tol) return best;
    if (it >= max_iter) {
      best.hit_limit = true;
      best.iterations = it;
      return best;
    }

    // Scaling or factorization failures mean the iterate has reached the
    // precision floor; the caller polishes whatever was reached.
    bool ok = true;
    for (std::size_t e = 0; e < m_ && ok; ++e) ok = nt_scaling(s_[e], y_[e], sc[e]);
    if (!ok || !factor(sc)) return best;

    // Predictor.
    for (std::size_t e = 0; e < m_; ++e) d[e] = -sc[e].lambda;
    const Direction aff = solve(sc, d);
    double alpha_aff = 1.0;
    for (std::size_t e = 0; e < m_; ++e) {
      alpha_aff = std::min({alpha_aff, max_step(s_[e], aff.ds[e]), max_step(y_[e], aff.dy[e])});
    }
    double sy_aff = 0.0;
    for (std::size_t e = 0; e < m_; ++e) {
      sy_aff += (s_[e] + alpha_aff * aff.ds[e]).dot(y_[e] + alpha_aff * aff.dy[e]);
    }
    const double sigma = std::pow(std::clamp(sy_aff / sy, 0.0, 1.0), 3.0);

    // Corrector.
    for (std::size_t e = 0; e < m_; ++e) {
      const Vec7& lam = sc[e].lambda;
      Vec7 rc = -circ(lam, lam) - circ(sc[e].w_inv * aff.ds[e], sc[e].w * aff.dy[e]);
      rc(0) += sigma * mu;
      d[e] = jordan_div(lam, rc);
    }
    const Direction dir = solve(sc, d);
    double alpha_max = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < m_; ++e) {
      alpha_max = std::min({alpha_max, max_step(s_[e], dir.ds[e]), max_step(y_[e], dir.dy[e])});
    }
    const double alpha = std::min(1.0, kStepFraction * alpha_max);
    if (!(alpha > 1e-12) || !dir.dx.allFinite()) return best;
    x_ += alpha * dir.dx;
    t_ += alpha * dir.dt;
    for (std::size_t e = 0; e < m_; ++e) {
      s_[e] += alpha * dir.ds[e];
      y_[e] += alpha * dir.dy[e];
    }
  }
}

// Active-set polish. Cones flagged in `zero` are taken to vanish at the
// optimum; they become equalities x_j - x_i = -b_e, the rest of the objective
// is smooth and is minimized by Newton's method. Multipliers of the zero cones
// are recovered by least squares from stationarity. Returns false if the
// guess is inconsistent; `collapsed` then names a smooth cone whose residual
// reached zero, or equals the cone count.
bool polish(const Scaled& p, const std::vector<char>& zero, const Eigen::VectorXd& x0,
            Eigen::VectorXd& x_out, std::vector<Vec6>& g_out, std::size_t& collapsed) {
  const std::size_t m = p.cones();
  collapsed = m;

  // Components of the zero-cone graph, with each node's offset from its root.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(p.nodes);
  for (std::size_t e = 0; e < m; ++e) {
    if (!zero[e]) continue;
    adj[p.ni[e]].emplace_back(p.nj[e], e);
    adj[p.nj[e]].emplace_back(p.ni[e], e);
  }
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> comp(p.nodes, kNone);
  std::vector<Vec6> off(p.nodes, Vec6::Zero());
  std::vector<std::ptrdiff_t> free_index;  // per component, -1 for the anchor's
  std::vector<std::size_t> order{p.anchor};
  for (std::size_t k = 0; k < p.nodes; ++k) {
    if (k != p.anchor) order.push_back(k);
  }
  std::ptrdiff_t free_count = 0;
  for (std::size_t root : order) {
    if (comp[root] != kNone) continue;
    const std::size_t c = free_index.size();
    free_index.push_back(root == p.anchor ? -1 : free_count++);
    comp[root] = c;
    std::vector<std::size_t> stack{root};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (auto [w, e] : adj[u]) {
        // x_j - x_i = -b_e
        const Vec6 ow = (w == p.nj[e]) ? Vec6(off[u] - p.b[e]) : Vec6(off[u] + p.b[e]);
        if (comp[w] == kNone) {
          comp[w] = c;
          off[w] = ow;
          stack.push_back(w);
        } else if ((off[w] - ow).norm() > 1e-10 * (1.0 + ow.norm())) {
          return false;  // zero cones on a cycle that cannot all vanish
        }
      }
    }
  }

  const Eigen::Index nz = 6 * free_count;
  auto expand = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd x(p.dim);
    for (std::size_t k = 0; k < p.nodes; ++k) {
      if (k == p.anchor) continue;
      const auto o = 6 * static_cast<Eigen::Index>(k < p.anchor ? k : k - 1);
      const auto f = free_index[comp[k]];
      x.segment<6>(o) = off[k] + (f >= 0 ? Vec6(z.segment<6>(6 * f)) : Vec6::Zero());
    }
    return x;
  };

  // Start from the component means of x0 - offset.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(nz);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(free_count);
  for (std::size_t k = 0; k < p.nodes; ++k) {
    const auto f = k == p.anchor ? -1 : free_index[comp[k]];
    if (f < 0) continue;
    const auto o = 6 * static_cast<Eigen::Index>(k < p.anchor ? k : k - 1);
    z.segment<6>(6 * f) += x0.segment<6>(o) - off[k];
    count(f) += 1.0;
  }
  for (Eigen::Index f = 0; f < free_count; ++f) z.segment<6>(6 * f) /= count(f);

  auto zblock = [&](std::size_t node) -> std::ptrdiff_t {
    const auto f = free_index[comp[node]];
    return f < 0 ? -1 : 6 * f;
  };
  double vsum = 0.0;
  for (double w : p.v) vsum += w;

  Eigen::VectorXd x = expand(z);
  // Gradient and Hessian of the smooth part in the free component variables.
  Eigen::VectorXd grad(nz);
  Eigen::MatrixXd hess(nz, nz);
  auto derivatives = [&](const Eigen::VectorXd& at, bool with_hessian) {
    grad.setZero();
    if (with_hessian) hess.setZero();
    for (std::size_t e = 0; e < m; ++e) {
      if (zero[e]) continue;
      const auto bi = zblock(p.ni[e]), bj = zblock(p.nj[e]);
      if (bi == bj) continue;
      const Vec6 u = p.b[e] + p.apply(e, at);
      const double un = u.norm();
      if (un < 1e-13) {
        collapsed = e;
        return false;
      }
      const Vec6 dir = u / un;
      if (bj >= 0) grad.segment<6>(bj) += p.v[e] * dir;
      if (bi >= 0) grad.segment<6>(bi) -= p.v[e] * dir;
      if (!with_hessian) continue;
      const Mat6 hb = p.v[e] / un * (Mat6::Identity() - dir * dir.transpose());
      if (bj >= 0) hess.block<6, 6>(bj, bj) += hb;
      if (bi >= 0) hess.block<6, 6>(bi, bi) += hb;
      if (bi >= 0 && bj >= 0) {
        hess.block<6, 6>(bi, bj) -= hb;
        hess.block<6, 6>(bj, bi) -= hb;
      }
    }
    return true;
  };

  // Damped Newton (Levenberg-Marquardt): the damping grows on rejected steps,
  // which keeps near-singular directions such as flat optimal segments in check.
  double fx = p.objective(x);
  double lambda = 1e-12;
  for (int it = 0; it < 100 && nz > 0; ++it) {
    if (!derivatives(x, true)) return false;
    const double gnorm = grad.norm();
    if (gnorm <= 1e-15 * std::max(1.0, vsum)) break;
    const Eigen::VectorXd g_here = grad;
    const Eigen::MatrixXd h_here = hess;
    const double hscale = std::max(1e-300, h_here.diagonal().maxCoeff());
    // Armijo on f; once f stops resolving the decrease, a drop in the
    // gradient norm is accepted instead.
    const double flat = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, fx);
    bool moved = false;
    for (int tries = 0; tries < 30 && !moved; ++tries) {
      Eigen::MatrixXd damped = h_here;
      damped.diagonal().array() += lambda * hscale;
      const Eigen::VectorXd step = damped.ldlt().solve(-g_here);
      if (step.allFinite()) {
        const Eigen::VectorXd xt = expand(z + step);
        const double ft = p.objective(xt);
        bool accept = ft < fx && ft <= fx + 1e-4 * g_here.dot(step);
        if (!accept && ft <= fx + flat) accept = derivatives(xt, false) && grad.norm() < 0.9 * gnorm;
        if (accept) {
          z += step;
          x = xt;
          fx = ft;
          moved = true;
          lambda = std::max(1e-14, lambda * 0.1);
          continue;
        }
      }
      lambda *= 100.0;
    }
    if (!moved) break;
  }
  if (nz == 0) x = expand(z);

  // Multipliers: unit directions on nonzero cones, least squares on the rest.
  g_out.assign(m, Vec6::Zero());
  Eigen::MatrixXd demand = Eigen::MatrixXd::Zero(p.dim / 6, 6);
  std::vector<std::size_t> zidx;
  for (std::size_t e = 0; e < m; ++e) {
    if (zero[e]) {
      zidx.push_back(e);
      continue;
    }
    const Vec6 u = p.b[e] + p.apply(e, x);
    const double un = u.norm();
    if (un == 0.0) {
      collapsed = e;
      return false;
    }
    g_out[e] = p.v[e] * u / un;
    if (p.oj[e] >= 0) demand.row(p.oj[e] / 6) += g_out[e].transpose();
    if (p.oi[e] >= 0) demand.row(p.oi[e] / 6) -= g_out[e].transpose();
  }
  if (!zidx.empty()) {
    Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(p.dim / 6, static_cast<Eigen::Index>(zidx.size()));
    for (std::size_t k = 0; k < zidx.size(); ++k) {
      const std::size_t e = zidx[k];
      const auto col = static_cast<Eigen::Index>(k);
      if (p.oj[e] >= 0) inc(p.oj[e] / 6, col) += 1.0;
      if (p.oi[e] >= 0) inc(p.oi[e] / 6, col) -= 1.0;
    }
    const Eigen::MatrixXd gz = inc.completeOrthogonalDecomposition().solve(-demand);
    for (std::size_t k = 0; k < zidx.size(); ++k) {
      g_out[zidx[k]] = gz.row(static_cast<Eigen::Index>(k)).transpose();
    }
  }
  x_out = x;
  return x.allFinite();
}

// Tries several guesses of the zero-cone set and keeps the best certificate.
void polish_best(const Scaled& p, Eigen::VectorXd& x, std::vector<Vec6>& g, Certificate& cert) {
  const std::size_t m = p.cones();
  auto residuals = [&](const Eigen::VectorXd& at) {
    std::vector<double> r(m);
    for (std::size_t e = 0; e < m; ++e) r[e] = (p.b[e] + p.apply(e, at)).norm();
    return r;
  };
  std::vector<std::vector<char>> guesses;
  const std::vector<double> r0 = residuals(x);
  std::vector<char> z(m);
  for (std::size_t e = 0; e < m; ++e) z[e] = r0[e] < p.v[e] - g[e].norm();
  guesses.push_back(z);
  for (double tau : {1e-6, 1e-4, 1e-3, 1e-2}) {
    for (std::size_t e = 0; e < m; ++e) z[e] = r0[e] < tau;
    guesses.push_back(z);
  }

  // From each guess, drop the zero cone whose multiplier most exceeds its
  // ball, or add a smooth cone that (nearly) collapsed, and polish again.
  const double f0 = p.objective(x);
  for (std::vector<char>& zk : guesses) {
    for (int round = 0; round < 8 && cert.measure() >= 1e-14; ++round) {
      Eigen::VectorXd xp;
      std::vector<Vec6> gp;
      std::size_t collapsed = m;
      if (!polish(p, zk, x, xp, gp, collapsed)) {
        if (collapsed == m) break;
        zk[collapsed] = 1;
        continue;
      }
      std::size_t worst = m;
      double worst_ratio = 1.0 + 1e-9;
      for (std::size_t e = 0; e < m; ++e) {
        const double ratio = gp[e].norm() / p.v[e];
        if (zk[e] && ratio > worst_ratio) {
          worst = e;
          worst_ratio = ratio;
        }
      }
      const Certificate pc = certify(p, xp, gp);
      if (pc.measure() < cert.measure() && p.objective(xp) <= f0 + 1e-12 * std::max(1.0, f0)) {
        x = xp;
        g = gp;
        cert = pc;
      }
      if (worst != m) {
        zk[worst] = 0;
        continue;
      }
      // Multipliers fit; a smooth cone that nearly vanished is the next
      // candidate for the zero set.
      std::size_t tiny = m;
      double tiny_r = 1e-8;
      for (std::size_t e = 0; e < m; ++e) {
        const double r = (p.b[e] + p.apply(e, xp)).norm();
        if (!zk[e] && r < tiny_r) {
          tiny = e;
          tiny_r = r;
        }
      }
      if (tiny == m) break;
      zk[tiny] = 1;
    }
  }
}

void check_structure(const SumOfNormsProblem& prob) {
  const std::size_t n = prob.node_count;
  if (n == 0 || prob.anchor >= n) throw InvalidArgument("sum-of-norms: bad node count or anchor");
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const Cone& c : prob.cones) {
    if (c.i >= n || c.j >= n || c.i == c.j) {
      throw InvalidArgument("sum-of-norms: cone endpoints must be distinct valid nodes");
    }
    if (!c.b.allFinite() || !std::isfinite(c.v) || c.v < 0.0) {
      throw InvalidArgument("sum-of-norms: cone data must be finite with v >= 0");
    }
    parent[find(c.i)] = find(c.j);
  }
  const std::size_t root = find(prob.anchor);
  for (std::size_t k = 0; k < n; ++k) {
    if (find(k) != root) {
      throw StructuralError("sum-of-norms: node " + std::to_string(k) +
                            " is not linked to the anchor by any cone path");
    }
  }
}

}  // namespace

std::ptrdiff_t SumOfNormsProblem::block_offset(std::size_t node) const {
  if (node == anchor) return -1;
  return 6 * static_cast<std::ptrdiff_t>(node < anchor ? node : node - 1);
}

std::string_view to_string(ConeStatus s) {
  switch (s) {
    case ConeStatus::optimal: return "optimal";
    case ConeStatus::max_iter: return "max_iter";
    case ConeStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

double objective_value(const SumOfNormsProblem& prob, const Eigen::VectorXd& x) {
  double f = 0.0;
  for (const Cone& c : prob.cones) {
    Vec6 r = c.b;
    if (const auto oj = prob.block_offset(c.j); oj >= 0) r += x.segment<6>(oj);
    if (const auto oi = prob.block_offset(c.i); oi >= 0) r -= x.segment<6>(oi);
    f += c.v * r.norm();
  }
  return f;
}

ConeSolution solve_sum_of_norms(const SumOfNormsProblem& prob, double tol, int max_iter) {
  check_structure(prob);
  const std::size_t m = prob.cones.size();
  const auto dim = static_cast<Eigen::Index>(prob.var_dim());

  // Unit-scale copy: argmin is invariant to scaling v, and scales with b.
  double v_max = 0.0, b_max = 0.0;
  for (const Cone& c : prob.cones) {
    v_max = std::max(v_max, std::max(c.v, kMinConeWeight));
    b_max = std::max(b_max, c.b.norm());
  }
  if (m == 0 || dim == 0 || b_max == 0.0) {
    ConeSolution sol;
    sol.x = Eigen::VectorXd::Zero(dim);
    sol.objective = 0.0;
    sol.status = ConeStatus::optimal;
    sol.dual.assign(m, Vec6::Zero());
    return sol;
  }
  Scaled p;
  p.dim = dim;
  p.nodes = prob.node_count;
  p.anchor = prob.anchor;
  for (const Cone& c : prob.cones) {
    p.ni.push_back(c.i);
    p.nj.push_back(c.j);
    p.oi.push_back(prob.block_offset(c.i));
    p.oj.push_back(prob.block_offset(c.j));
    p.b.push_back(c.b / b_max);
    p.v.push_back(std::max(c.v, kMinConeWeight) / v_max);
  }

  SumOfNormsIpm ipm(p);
  IpmResult r = ipm.run(tol, max_iter);
  Eigen::VectorXd x = r.x;
  std::vector<Vec6> g = r.g;
  Certificate cert = r.cert;

  polish_best(p, x, g, cert);

  ConeSolution sol;
  sol.x = x * b_max;
  sol.iterations = r.iterations;
  sol.gap = cert.gap;
  sol.dual = std::move(g);
  for (auto& d : sol.dual) d *= v_max;
  if (cert.measure() <= tol) {
    sol.status = ConeStatus::optimal;
  } else {
    sol.status = r.hit_limit ? ConeStatus::max_iter : ConeStatus::numerical_failure;
  }
  SumOfNormsProblem clamped = prob;
  for (Cone& c : clamped.cones) c.v = std::max(c.v, kMinConeWeight);
  sol.objective = objective_value(clamped, sol.x);
  return sol;
}

}  // namespace lma
