#ifndef RKSS_KERNEL_HPP
#define RKSS_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkss/geometry.hpp"
#include "rkss/piecewise.hpp"

namespace rkss {

struct IndexRange {
  long lo = 0, hi = 0;
  bool empty() const { return hi < lo; }
  long count() const { return empty() ? 0 : hi - lo + 1; }
};

// Integral kernel in factorized form K(x,y) = Σ_k φ_k(x) κ_k(y), truncated to
// a bounded window.  Basis columns are padded beyond the evaluation domain so
// every in-domain evaluation sees the complete (tail-truncated) sum.
struct Kernel {
  int dim = 1;
  std::vector<PiecewisePoly> basis;    // φ_k
  std::vector<PiecewisePoly> cokernel; // κ_k
  std::vector<double> anchors;         // nominal column locations
  std::vector<bool> boundary_col;      // basis support not fully inside domain
  double support_radius = 0.0;         // max reach of any column from its anchor
  bool symmetric = false;
  Box domain;                          // evaluation window
  double grid_resolution = 1e-3;
  double quad_tolerance = 1e-11;
  double sweep_period = 0.0;           // K(x+P, y+P) = K(x,y) when > 0
  bool reflect_even = false;           // K(−x,−y) = K(x,y)
  std::string type = "custom";
  std::map<std::string, double> params;
  double inverse_decay = 0.0;          // fitted |b_ij| per-step ratio (bspline)

  // closed-form fast path for the geometric hat kernels
  bool has_fast = false;
  int fast_n = 1;
  double fast_amp = 0.0;
  int fast_mcut = 0;
  std::vector<double> fast_rho_pow;    // signed ρ^m, m = 0..mcut

  // search indices (built by finalize)
  std::vector<double> basis_lo, cok_lo;
  double basis_maxw = 0.0, cok_maxw = 0.0;

  std::size_t columns() const { return basis.size(); }

  void finalize()
  {
    // keep columns sorted by the left edge of the basis support
    std::vector<std::size_t> order(basis.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return basis[a].lo() < basis[b].lo();
    });
    auto permute = [&](auto& v) {
      auto copy = v;
      for (std::size_t i = 0; i < order.size(); ++i) v[i] = std::move(copy[order[i]]);
    };
    permute(basis);
    permute(cokernel);
    permute(anchors);
    if (!boundary_col.empty()) {
      std::vector<bool> copy = boundary_col;
      for (std::size_t i = 0; i < order.size(); ++i) boundary_col[i] = copy[order[i]];
    }
    basis_lo.resize(basis.size());
    cok_lo.resize(cokernel.size());
    basis_maxw = cok_maxw = 0.0;
    support_radius = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      basis_lo[i] = basis[i].lo();
      basis_maxw = std::max(basis_maxw, basis[i].hi() - basis[i].lo());
      cok_lo[i] = cokernel[i].lo();
      cok_maxw = std::max(cok_maxw, cokernel[i].hi() - cokernel[i].lo());
      double reach = std::max({std::abs(basis[i].lo() - anchors[i]),
                               std::abs(basis[i].hi() - anchors[i]),
                               std::abs(cokernel[i].lo() - anchors[i]),
                               std::abs(cokernel[i].hi() - anchors[i])});
      support_radius = std::max(support_radius, reach);
    }
    if (boundary_col.empty()) {
      boundary_col.assign(basis.size(), false);
      for (std::size_t i = 0; i < basis.size(); ++i)
        boundary_col[i] =
            basis[i].lo() < domain.lo[0] - 1e-12 || basis[i].hi() > domain.hi[0] + 1e-12;
    }
  }

  bool in_domain(double t) const
  {
    return t >= domain.lo[0] - 1e-12 && t <= domain.hi[0] + 1e-12;
  }

  // Active basis columns at x with their values.
  std::vector<std::pair<std::size_t, double>> basis_at(double x) const
  {
    std::vector<std::pair<std::size_t, double>> out;
    auto it = std::lower_bound(basis_lo.begin(), basis_lo.end(), x - basis_maxw);
    for (std::size_t i = static_cast<std::size_t>(it - basis_lo.begin());
         i < basis.size() && basis_lo[i] <= x; ++i) {
      double v = basis[i].eval(x);
      if (v != 0.0) out.emplace_back(i, v);
    }
    return out;
  }

  std::vector<std::pair<std::size_t, double>> cokernel_at(double y) const
  {
    // cok_lo is nondecreasing for every factory (equal-width columns); fall
    // back to the worst case of a full scan window of cok_maxw.
    std::vector<std::pair<std::size_t, double>> out;
    auto it = std::lower_bound(cok_lo.begin(), cok_lo.end(), y - cok_maxw);
    for (std::size_t i = static_cast<std::size_t>(it - cok_lo.begin());
         i < cokernel.size() && cok_lo[i] <= y; ++i) {
      double v = cokernel[i].eval(y);
      if (v != 0.0) out.emplace_back(i, v);
    }
    return out;
  }

  // Unchecked evaluation (used by sweeps, which stay inside the padded window).
  double eval_raw(double x, double y) const
  {
    if (has_fast) {
      // K_N(x,y) = amp · Σ_{k,l} h(x−k) h(N(y−l)) ρ^{|k−l|}, |k−l| ≤ mcut
      double s = 0.0;
      double fx = std::floor(x);
      long k0 = static_cast<long>(fx);
      double wx1 = x - fx; // weight of k0+1
      double n = static_cast<double>(fast_n);
      for (int a = 0; a <= 1; ++a) {
        long k = k0 + a;
        double hk = (a == 0) ? 1.0 - wx1 : wx1;
        if (hk == 0.0) continue;
        // l with |N(y-l)| < 1
        long l_lo = static_cast<long>(std::ceil(y - 1.0 / n));
        long l_hi = static_cast<long>(std::floor(y + 1.0 / n));
        for (long l = l_lo; l <= l_hi; ++l) {
          double hy = 1.0 - std::abs(n * (y - static_cast<double>(l)));
          if (hy <= 0.0) continue;
          long m = std::labs(k - l);
          if (m > fast_mcut) continue;
          s += hk * hy * fast_rho_pow[static_cast<std::size_t>(m)];
        }
      }
      return fast_amp * s;
    }
    double s = 0.0;
    for (const auto& [i, v] : basis_at(x)) s += v * cokernel[i].eval(y);
    return s;
  }

  double eval(double x, double y) const
  {
    if (!in_domain(x) || !in_domain(y))
      throw std::domain_error("Kernel::eval: point outside the evaluation window");
    return eval_raw(x, y);
  }

  // K(x, ·) as a piecewise polynomial in the second argument.
  PiecewisePoly row(double x) const
  {
    auto act = basis_at(x);
    std::vector<double> w;
    std::vector<const PiecewisePoly*> parts;
    for (const auto& [i, v] : act) {
      w.push_back(v);
      parts.push_back(&cokernel[i]);
    }
    return combine(w, parts);
  }

  // K(·, y) as a piecewise polynomial in the first argument.
  PiecewisePoly column(double y) const
  {
    auto act = cokernel_at(y);
    std::vector<double> w;
    std::vector<const PiecewisePoly*> parts;
    for (const auto& [i, v] : act) {
      w.push_back(v);
      parts.push_back(&basis[i]);
    }
    return combine(w, parts);
  }

  void basis_breaks_in(double a, double b, std::vector<double>& out) const
  {
    auto it = std::lower_bound(basis_lo.begin(), basis_lo.end(), a - basis_maxw);
    for (std::size_t i = static_cast<std::size_t>(it - basis_lo.begin());
         i < basis.size() && basis_lo[i] <= b; ++i)
      for (double br : basis[i].breaks)
        if (br > a && br < b) out.push_back(br);
  }

  void cokernel_breaks_in(double a, double b, std::vector<double>& out) const
  {
    auto it = std::lower_bound(cok_lo.begin(), cok_lo.end(), a - cok_maxw);
    for (std::size_t i = static_cast<std::size_t>(it - cok_lo.begin());
         i < cokernel.size() && cok_lo[i] <= b; ++i)
      for (double br : cokernel[i].breaks)
        if (br > a && br < b) out.push_back(br);
  }
};

inline double eval_kernel(const Kernel& K, double x, double y) { return K.eval(x, y); }

namespace detail {

// multiples of `step` strictly inside (a, b)
inline void push_lattice(double a, double b, double step, std::vector<double>& out)
{
  for (long k = static_cast<long>(std::ceil(a / step)); k * step < b; ++k) {
    double v = static_cast<double>(k) * step;
    if (v > a && v < b) out.push_back(v);
  }
}

// sup over [xa,xb]×[ya,yb] of |K − ref|, with no domain clipping (the raw
// factorized form extends past the evaluation window).  Exact by corner
// candidates of the breakpoint arrangement when every touched piece is affine
// per variable; otherwise sub-grid evaluation plus a per-cell Lipschitz pad, so
// the result never under-approximates.
inline double osc_rect(const Kernel& K, double xa, double xb, double ya, double yb,
                       double ref)
{
  if (K.has_fast && (xb - xa) < 70.0 && (yb - ya) * K.fast_n < 70.0) {
    // breakpoints of the closed form are the unit and 1/N lattices; pieces are
    // affine per variable, so arrangement corners carry the extrema
    double cx[80], cy[80];
    int nx = 0, ny = 0;
    cx[nx++] = xa;
    for (double k = std::ceil(xa); k < xb && nx < 79; ++k)
      if (k > xa) cx[nx++] = k;
    cx[nx++] = xb;
    double step = 1.0 / static_cast<double>(K.fast_n);
    cy[ny++] = ya;
    for (long l = static_cast<long>(std::ceil(ya / step)); l * step < yb && ny < 79; ++l) {
      double v = static_cast<double>(l) * step;
      if (v > ya) cy[ny++] = v;
    }
    cy[ny++] = yb;
    double best = 0.0;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j)
        best = std::max(best, std::abs(K.eval_raw(cx[i], cy[j]) - ref));
    return best;
  }

  std::vector<double> xc{xa, xb}, yc{ya, yb};
  K.basis_breaks_in(xa, xb, xc);
  K.cokernel_breaks_in(ya, yb, yc);
  std::sort(xc.begin(), xc.end());
  xc.erase(std::unique(xc.begin(), xc.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-14; }),
           xc.end());
  std::sort(yc.begin(), yc.end());
  yc.erase(std::unique(yc.begin(), yc.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-14; }),
           yc.end());

  // Degree scan over the touched pieces.
  int max_deg = 0;
  {
    auto scan = [&](const std::vector<PiecewisePoly>& fam,
                    const std::vector<double>& los, double maxw, double a, double b) {
      auto it = std::lower_bound(los.begin(), los.end(), a - maxw);
      for (std::size_t i = static_cast<std::size_t>(it - los.begin());
           i < fam.size() && los[i] <= b; ++i)
        for (const auto& c : fam[i].coef) max_deg = std::max(max_deg, poly_degree(c));
    };
    scan(K.basis, K.basis_lo, K.basis_maxw, xa, xb);
    scan(K.cokernel, K.cok_lo, K.cok_maxw, ya, yb);
  }

  double best = 0.0;
  if (max_deg <= 1) {
    // bilinear on every cell: extrema at the corner grid
    for (double ux : xc)
      for (double uy : yc)
        best = std::max(best, std::abs(K.eval_raw(ux, uy) - ref));
    return best;
  }

  // Higher degree: per cell, sample a sub-grid and pad with a Lipschitz bound
  // assembled from the factor sups on the cell.
  const int s = 6;
  for (std::size_t ix = 0; ix + 1 < xc.size(); ++ix) {
    for (std::size_t iy = 0; iy + 1 < yc.size(); ++iy) {
      double cxa = xc[ix], cxb = xc[ix + 1], cya = yc[iy], cyb = yc[iy + 1];
      double lx = 0.0, ly = 0.0, cell_best = 0.0;
      auto act = K.basis_at(0.5 * (cxa + cxb));
      for (const auto& [i, v] : act) {
        (void)v;
        double sb = K.basis[i].sup_abs(cxa, cxb);
        double sdb = K.basis[i].derivative().sup_abs(cxa, cxb);
        double sk = K.cokernel[i].sup_abs(cya, cyb);
        double sdk = K.cokernel[i].derivative().sup_abs(cya, cyb);
        lx += sdb * sk;
        ly += sb * sdk;
      }
      double hx = (cxb - cxa) / s, hy = (cyb - cya) / s;
      for (int a = 0; a <= s; ++a)
        for (int b = 0; b <= s; ++b)
          cell_best = std::max(
              cell_best, std::abs(K.eval_raw(cxa + a * hx, cya + b * hy) - ref));
      best = std::max(best, cell_best + 0.5 * (lx * hx + ly * hy));
    }
  }
  return best;
}

// Over-estimate of sup over [xa,xb]×[ya,yb] of |∂K/∂x| + |∂K/∂y| for the
// closed-form kernels: per active (k,l) pair, |h'|·|h_N| + |h|·|h_N'| ≤ 1 + N.
inline double fast_slope_bound(const Kernel& K, double xa, double xb, double ya,
                               double yb)
{
  double n = static_cast<double>(K.fast_n);
  long klo = static_cast<long>(std::ceil(xa - 1.0));
  long khi = static_cast<long>(std::floor(xb + 1.0));
  long llo = static_cast<long>(std::ceil(ya - 1.0 / n));
  long lhi = static_cast<long>(std::floor(yb + 1.0 / n));
  double acc = 0.0;
  for (long k = klo; k <= khi; ++k)
    for (long l = llo; l <= lhi; ++l) {
      long m = std::labs(k - l);
      if (m > K.fast_mcut) continue;
      acc += std::abs(K.fast_rho_pow[static_cast<std::size_t>(m)]);
    }
  return K.fast_amp * (1.0 + n) * acc;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Two-argument modulus of continuity at a point:
//   sup over |x′|≤δ, |y′|≤δ of |K(x+x′, y+y′) − K(x,y)|,
// the probe rectangle clipped to the evaluation window.  Never
// under-approximates (see detail::osc_rect).
// ---------------------------------------------------------------------------
inline double modulus(const Kernel& K, double delta, double x, double y)
{
  if (delta < 0.0) throw std::invalid_argument("modulus: negative window");
  if (delta == 0.0) return 0.0;
  double ref = K.eval_raw(x, y);
  double xa = std::max(x - delta, K.domain.lo[0]);
  double xb = std::min(x + delta, K.domain.hi[0]);
  double ya = std::max(y - delta, K.domain.lo[0]);
  double yb = std::min(y + delta, K.domain.hi[0]);
  return detail::osc_rect(K, xa, xb, ya, yb, ref);
}

// |∫ K(x,z) K(z,y) dz − K(x,y)|, z integrated over the full padded support.
inline double reproducing_defect(const Kernel& K, double x, double y)
{
  if (!K.in_domain(x) || !K.in_domain(y))
    throw std::domain_error("reproducing_defect: point outside the evaluation window");
  PiecewisePoly rx = K.row(x);
  PiecewisePoly cy = K.column(y);
  double composed = integrate_product(rx, cy);
  return std::abs(composed - K.eval_raw(x, y));
}

// ---------------------------------------------------------------------------
// Factories.
// ---------------------------------------------------------------------------

// Geometric hat-sum kernels: φ_k = h(·−k),
// κ_k(y) = (3N²/√(9N²−6N)) Σ_l ρ^{|k−l|} h(N(y−l)), ρ = √(9N²−6N) − 3N + 1.
// The window gives the evaluation domain [lo, hi]; basis columns are padded
// beyond it by the geometric-tail reach so in-domain evaluations and operator
// compositions are truncation-free.
inline Kernel make_linear_spline_kernel(int N, IndexRange window,
                                        double grid_resolution = 1e-3)
{
  if (N < 1) throw std::invalid_argument("make_linear_spline_kernel: N must be ≥ 1");
  if (window.empty())
    throw std::invalid_argument("make_linear_spline_kernel: empty window");
  double Nd = static_cast<double>(N);
  double disc = std::sqrt(9.0 * Nd * Nd - 6.0 * Nd);
  double amp = 3.0 * Nd * Nd / disc;
  double rho = disc - 3.0 * Nd + 1.0; // in (−1, 0)
  int mcut = static_cast<int>(std::ceil(14.0 / -std::log10(std::abs(rho))));

  Kernel K;
  K.type = "linear_spline";
  K.params["N"] = Nd;
  K.params["window_lo"] = static_cast<double>(window.lo);
  K.params["window_hi"] = static_cast<double>(window.hi);
  K.dim = 1;
  K.domain = Box::interval(static_cast<double>(window.lo), static_cast<double>(window.hi));
  K.grid_resolution = grid_resolution;
  K.symmetric = (N == 1);
  K.sweep_period = 1.0;
  K.reflect_even = true;
  K.has_fast = true;
  K.fast_n = N;
  K.fast_amp = amp;
  K.fast_mcut = mcut;
  K.fast_rho_pow.resize(static_cast<std::size_t>(mcut) + 1);
  K.fast_rho_pow[0] = 1.0;
  for (int m = 1; m <= mcut; ++m)
    K.fast_rho_pow[static_cast<std::size_t>(m)] =
        K.fast_rho_pow[static_cast<std::size_t>(m - 1)] * rho;

  long pad = mcut + 3;
  for (long k = window.lo - pad; k <= window.hi + pad; ++k) {
    K.basis.push_back(make_hat(static_cast<double>(k), 1.0));
    std::vector<double> w;
    std::vector<PiecewisePoly> tents;
    for (long l = k - mcut; l <= k + mcut; ++l) {
      w.push_back(amp * K.fast_rho_pow[static_cast<std::size_t>(std::labs(l - k))]);
      tents.push_back(make_hat(static_cast<double>(l), 1.0 / Nd));
    }
    std::vector<const PiecewisePoly*> parts;
    for (const auto& t : tents) parts.push_back(&t);
    K.cokernel.push_back(combine(w, parts));
    K.anchors.push_back(static_cast<double>(k));
  }
  K.finalize();
  return K;
}

// Orthonormal shift-invariant projector kernel K(x,y) = Σ_i Σ_k g_i(x−k) g_i(y−k).
inline Kernel make_shift_invariant_kernel(const std::vector<PiecewisePoly>& generators,
                                          IndexRange window,
                                          double grid_resolution = 1e-3)
{
  if (generators.empty())
    throw std::invalid_argument("make_shift_invariant_kernel: no generators");
  if (window.empty())
    throw std::invalid_argument("make_shift_invariant_kernel: empty window");
  // Orthonormality of the integer shifts.
  double worst = 0.0;
  double maxw = 0.0;
  for (const auto& g : generators) maxw = std::max(maxw, g.hi() - g.lo());
  long shift_reach = static_cast<long>(std::ceil(maxw)) + 1;
  for (std::size_t i = 0; i < generators.size(); ++i)
    for (std::size_t j = 0; j < generators.size(); ++j)
      for (long k = -shift_reach; k <= shift_reach; ++k) {
        double ip = integrate_product(generators[i].translated(static_cast<double>(k)),
                                      generators[j]);
        double want = (i == j && k == 0) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(ip - want));
      }
  if (worst > 1e-8)
    throw std::invalid_argument(
        "make_shift_invariant_kernel: generator shifts are not orthonormal "
        "(worst Gram deviation " +
        std::to_string(worst) + ")");

  Kernel K;
  K.type = "shift_invariant";
  K.params["generators"] = static_cast<double>(generators.size());
  K.params["window_lo"] = static_cast<double>(window.lo);
  K.params["window_hi"] = static_cast<double>(window.hi);
  K.dim = 1;
  K.domain = Box::interval(static_cast<double>(window.lo), static_cast<double>(window.hi));
  K.grid_resolution = grid_resolution;
  K.symmetric = true;
  K.sweep_period = 1.0;
  long pad = static_cast<long>(std::ceil(maxw)) + 2;
  for (long k = window.lo - pad; k <= window.hi + pad; ++k)
    for (const auto& g : generators) {
      auto shifted = g.translated(static_cast<double>(k));
      K.basis.push_back(shifted);
      K.cokernel.push_back(shifted);
      K.anchors.push_back(static_cast<double>(k));
    }
  K.finalize();
  return K;
}

namespace detail {

// Least-squares exponential fit of the off-diagonal decay of a matrix row.
inline double fit_decay_ratio(const Eigen::MatrixXd& B)
{
  long m = B.rows();
  long mid = m / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long n = 0;
  for (long j = mid; j < m; ++j) {
    double v = std::abs(B(mid, j));
    if (v < 1e-13 * std::abs(B(mid, mid))) break;
    double lx = static_cast<double>(j - mid), ly = std::log(v);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  double slope = (static_cast<double>(n) * sxy - sx * sy) /
                 (static_cast<double>(n) * sxx - sx * sx);
  return std::exp(slope);
}

} // namespace detail

// Projector onto a spline space: K(x,y) = Σ_{i,j} B_i(x) (G⁻¹)_{ij} B_j(y)
// with G the banded Gram matrix of the B-spline family on the knot sequence.
inline Kernel make_bspline_kernel(int order, const std::vector<double>& knots,
                                  IndexRange window, double grid_resolution = 1e-3)
{
  if (order < 1) throw std::invalid_argument("make_bspline_kernel: order must be ≥ 1");
  if (static_cast<long>(knots.size()) < order + 2)
    throw std::invalid_argument("make_bspline_kernel: not enough knots");
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    if (!(knots[i] < knots[i + 1]))
      throw std::invalid_argument("make_bspline_kernel: knots must be strictly increasing");

  long m_all = static_cast<long>(knots.size()) - order - 1;
  if (window.lo < 0 || window.hi >= m_all || window.empty())
    throw std::invalid_argument("make_bspline_kernel: window outside the spline family");
  long m = window.count();

  std::vector<PiecewisePoly> fam;
  fam.reserve(static_cast<std::size_t>(m));
  for (long i = window.lo; i <= window.hi; ++i) {
    std::vector<double> sub(knots.begin() + i, knots.begin() + i + order + 2);
    fam.push_back(make_bspline(order, sub));
  }

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  for (long i = 0; i < m; ++i)
    for (long j = i; j < m && j <= i + order; ++j) {
      double ip = integrate_product(fam[static_cast<std::size_t>(i)],
                                    fam[static_cast<std::size_t>(j)]);
      G(i, j) = ip;
      G(j, i) = ip;
    }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12)
    throw std::invalid_argument(
        "make_bspline_kernel: Gram matrix is numerically singular (condition " +
        std::to_string(lmax / std::max(lmin, 1e-300)) + ")");
  Eigen::MatrixXd B = G.llt().solve(Eigen::MatrixXd::Identity(m, m));

  Kernel K;
  K.type = "bspline";
  K.params["order"] = static_cast<double>(order);
  K.params["window_lo"] = static_cast<double>(window.lo);
  K.params["window_hi"] = static_cast<double>(window.hi);
  K.dim = 1;
  // region where the windowed family spans the full spline space
  double dom_lo = knots[static_cast<std::size_t>(window.lo + order)];
  double dom_hi = knots[static_cast<std::size_t>(window.hi + 1)];
  if (!(dom_lo < dom_hi))
    throw std::invalid_argument("make_bspline_kernel: window too small for the order");
  K.domain = Box::interval(dom_lo, dom_hi);
  K.grid_resolution = grid_resolution;
  K.symmetric = true;
  K.inverse_decay = detail::fit_decay_ratio(B);

  double bmax = B.cwiseAbs().maxCoeff();
  for (long i = 0; i < m; ++i) {
    K.basis.push_back(fam[static_cast<std::size_t>(i)]);
    std::vector<double> w;
    std::vector<const PiecewisePoly*> parts;
    for (long j = 0; j < m; ++j) {
      if (std::abs(B(i, j)) < 1e-14 * bmax) continue;
      w.push_back(B(i, j));
      parts.push_back(&fam[static_cast<std::size_t>(j)]);
    }
    K.cokernel.push_back(combine(w, parts));
    double a = 0.5 * (fam[static_cast<std::size_t>(i)].lo() +
                      fam[static_cast<std::size_t>(i)].hi());
    K.anchors.push_back(a);
  }
  // flag columns whose inverse row is distorted by the matrix edge
  double ratio = std::max(K.inverse_decay, 1e-3);
  long reach = static_cast<long>(std::ceil(14.0 / -std::log10(ratio)));
  K.boundary_col.assign(static_cast<std::size_t>(m), false);
  for (long i = 0; i < m; ++i)
    if (i < reach || i >= m - reach) K.boundary_col[static_cast<std::size_t>(i)] = true;
  K.finalize();
  return K;
}

// Biorthogonal pair kernel K(x,y) = Σ_λ φ_λ(x) φ̃_λ(y).
inline Kernel make_generator_pair_kernel(const std::vector<PiecewisePoly>& phis,
                                         const std::vector<PiecewisePoly>& phitildes,
                                         const std::vector<double>& anchors,
                                         double grid_resolution = 1e-3)
{
  if (phis.size() != phitildes.size() || phis.size() != anchors.size() || phis.empty())
    throw std::invalid_argument("make_generator_pair_kernel: family size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < phis.size(); ++i)
    for (std::size_t j = 0; j < phitildes.size(); ++j) {
      if (phis[i].hi() <= phitildes[j].lo() || phitildes[j].hi() <= phis[i].lo()) {
        continue; // disjoint supports integrate to zero exactly
      }
      double ip = integrate_product(phis[i], phitildes[j]);
      double want = (i == j) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(ip - want));
    }
  if (worst > 1e-8)
    throw std::invalid_argument(
        "make_generator_pair_kernel: families are not biorthogonal "
        "(worst deviation " +
        std::to_string(worst) + ")");
  Kernel K;
  K.type = "generator_pair";
  K.params["columns"] = static_cast<double>(phis.size());
  K.dim = 1;
  double lo = phis.front().lo(), hi = phis.front().hi();
  for (const auto& p : phis) {
    lo = std::min(lo, p.lo());
    hi = std::max(hi, p.hi());
  }
  K.domain = Box::interval(lo, hi);
  K.grid_resolution = grid_resolution;
  K.symmetric = false;
  K.basis = phis;
  K.cokernel = phitildes;
  K.anchors = anchors;
  K.finalize();
  return K;
}

} // namespace rkss

#endif // RKSS_KERNEL_HPP
