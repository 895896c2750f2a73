#ifndef RKSS_CONSTANTS_HPP
#define RKSS_CONSTANTS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkss/kernel.hpp"
#include "rkss/parallel.hpp"

namespace rkss {

namespace detail {

// largest |x − y| with K(x,y) possibly nonzero, from the materialized columns
inline double column_reach(const Kernel& K)
{
  double r = 0.0;
  for (std::size_t i = 0; i < K.columns(); ++i) {
    r = std::max(r, std::abs(K.basis[i].hi() - K.cokernel[i].lo()));
    r = std::max(r, std::abs(K.cokernel[i].hi() - K.basis[i].lo()));
  }
  return r;
}

// per-column products sup|φ'|·sup|κ| + sup|φ|·sup|κ'| for the generic
// slope bound (assembled once per sweep)
struct SlopeCache {
  std::vector<double> prod;
};

inline SlopeCache make_slope_cache(const Kernel& K)
{
  SlopeCache sc;
  sc.prod.resize(K.columns());
  for (std::size_t i = 0; i < K.columns(); ++i) {
    double sb = K.basis[i].sup_abs_all();
    double sdb = K.basis[i].derivative().sup_abs_all();
    double sk = K.cokernel[i].sup_abs_all();
    double sdk = K.cokernel[i].derivative().sup_abs_all();
    sc.prod[i] = sdb * sk + sb * sdk;
  }
  return sc;
}

// over-estimate of sup over the rectangle of |∂K/∂x| + |∂K/∂y|
inline double slope_bound(const Kernel& K, const SlopeCache& sc, double xa, double xb,
                          double ya, double yb)
{
  if (K.has_fast) return fast_slope_bound(K, xa, xb, ya, yb);
  double acc = 0.0;
  auto it = std::lower_bound(K.basis_lo.begin(), K.basis_lo.end(), xa - K.basis_maxw);
  for (std::size_t i = static_cast<std::size_t>(it - K.basis_lo.begin());
       i < K.columns() && K.basis_lo[i] <= xb; ++i) {
    if (K.basis[i].hi() <= xa) continue;
    if (K.cokernel[i].hi() <= ya || K.cokernel[i].lo() > yb) continue;
    acc += sc.prod[i];
  }
  return acc;
}

} // namespace detail

// ---------------------------------------------------------------------------
// L¹(dt) norm of the oscillation envelope t ↦ sup_z ω_w(K)(t+z, z), where
// ω_w is the two-argument oscillation over a radius-w window (w = 0 gives the
// plain decay profile sup_z |K(t+z,z)|).  The z-sup runs over a uniform grid
// of cell midpoints — one translation period when the kernel has one — and
// each cell adds a local Lipschitz pad, so the reported value is an
// over-estimate of the grid quantity; the t-integral is composite midpoint.
// Throws when the outermost 5% of the t-range still carries relative mass
// above 1e−8 (the columns do not decay inside the truncated window).
// ---------------------------------------------------------------------------
inline double envelope_l1(const Kernel& K, double w)
{
  if (w < 0.0) throw std::invalid_argument("envelope_l1: negative window");
  const double res = K.grid_resolution;
  const double reach = detail::column_reach(K);
  const double R = reach + 2.0 * w + 1.0;
  const long jt = static_cast<long>(std::ceil(R / res));

  double z0, zlen;
  if (K.sweep_period > 0.0) {
    z0 = 0.0;
    zlen = K.sweep_period;
  } else {
    z0 = K.domain.lo[0] - w;
    zlen = (K.domain.hi[0] - K.domain.lo[0]) + 2.0 * w;
  }
  const long nz = std::max<long>(1, std::lround(zlen / res));
  const double resz = zlen / static_cast<double>(nz);

  detail::SlopeCache sc;
  if (!K.has_fast) sc = detail::make_slope_cache(K);

  const std::size_t nt = static_cast<std::size_t>(2 * jt + 1);
  std::vector<double> g(nt, 0.0);
  parallel_for(nt, [&](std::size_t idx) {
    double t = static_cast<double>(static_cast<long>(idx) - jt) * res;
    double best = 0.0;
    for (long i = 0; i < nz; ++i) {
      double z = z0 + (static_cast<double>(i) + 0.5) * resz;
      double x = t + z;
      double val, slope;
      if (w == 0.0) {
        val = std::abs(K.eval_raw(x, z));
        slope = detail::slope_bound(K, sc, x - 0.5 * resz, x + 0.5 * resz,
                                    z - 0.5 * resz, z + 0.5 * resz);
      } else {
        val = detail::osc_rect(K, x - w, x + w, z - w, z + w, K.eval_raw(x, z));
        slope = 2.0 * detail::slope_bound(K, sc, x - w - 0.5 * resz, x + w + 0.5 * resz,
                                          z - w - 0.5 * resz, z + w + 0.5 * resz);
      }
      best = std::max(best, val + 0.5 * slope * resz);
    }
    g[idx] = best;
  });

  double total = 0.0;
  for (double v : g) total += v;
  total *= res;

  const long band = std::max<long>(1, jt / 20);
  double tail = 0.0;
  for (long b = 0; b < band; ++b) {
    tail += g[static_cast<std::size_t>(b)];
    tail += g[nt - 1 - static_cast<std::size_t>(b)];
  }
  tail *= res;
  if (tail > 1e-8 * std::max(total, res))
    throw std::runtime_error(
        "kernel decay violation: tail mass " + std::to_string(tail) +
        " at truncation radius " + std::to_string(R));
  return total;
}

// ---------------------------------------------------------------------------
// Decay/regularity constants.  r0_of(δ) is the envelope norm of the radius-δ/2
// oscillation; the scale-weighted sum/oscillation factors use the radius-δ
// oscillation.  Lookups match stored δ values exactly (tolerance 1e−12).
// ---------------------------------------------------------------------------
struct KernelConstants {
  double r1 = 0.0;
  std::map<double, double> r0;  // δ → envelope of the radius-δ/2 oscillation
  std::map<double, double> osc; // δ → envelope of the radius-δ oscillation
  double grid_resolution = 0.0;
  double truncation_radius = 0.0;
  int dim = 1;

  static const double& lookup(const std::map<double, double>& m, double d,
                              const char* what)
  {
    auto it = m.lower_bound(d - 1e-12);
    if (it == m.end() || std::abs(it->first - d) > 1e-12)
      throw std::out_of_range(std::string(what) +
                              ": no value computed for delta = " + std::to_string(d));
    return it->second;
  }

  double r0_of(double d) const { return lookup(r0, d, "r0_of"); }
  double r2_of(double d) const
  {
    double r = r0_of(d);
    return (2.0 * r1 + r) * r;
  }
  double osc_of(double d) const { return lookup(osc, d, "osc_of"); }

  double aq_of(double d, double q) const
  {
    check_q(q);
    if (!(d > 0.0)) throw std::out_of_range("aq_of: positive delta required");
    double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    double dd = static_cast<double>(dim);
    return std::pow(d, -dd + dd * iq) * std::pow(r1, iq) *
           std::pow(r1 + osc_of(d), 1.0 - iq);
  }

  double bq_of(double d, double q) const
  {
    check_q(q);
    if (!(d > 0.0)) throw std::out_of_range("bq_of: positive delta required");
    double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    double dd = static_cast<double>(dim);
    return std::pow(std::pow(6.0, dd) + 1.0, 1.0 - iq) * std::pow(d, -dd + dd * iq) *
           osc_of(d);
  }

  static void check_q(double q)
  {
    if (std::isnan(q) || q < 1.0)
      throw std::invalid_argument("exponent q must lie in [1, ∞]");
  }
};

inline KernelConstants kernel_constants(const Kernel& K,
                                        const std::vector<double>& deltas,
                                        const std::vector<double>& qs = {})
{
  for (double d : deltas)
    if (d < 0.0 || std::isnan(d))
      throw std::invalid_argument("kernel_constants: deltas must be nonnegative");
  for (double q : qs) KernelConstants::check_q(q);

  KernelConstants C;
  C.dim = K.dim;
  C.grid_resolution = K.grid_resolution;
  C.truncation_radius = detail::column_reach(K) + 1.0;
  C.r1 = envelope_l1(K, 0.0);

  std::vector<double> radii;
  auto add_radius = [&](double w) {
    for (double r : radii)
      if (std::abs(r - w) <= 1e-12) return;
    radii.push_back(w);
  };
  for (double d : deltas)
    if (d > 0.0) {
      add_radius(0.5 * d);
      add_radius(d);
    }

  std::map<double, double> env;
  for (double w : radii) env[w] = envelope_l1(K, w);
  auto env_at = [&](double w) {
    auto it = env.lower_bound(w - 1e-12);
    return it->second;
  };

  for (double d : deltas) {
    if (d == 0.0) {
      C.r0[0.0] = 0.0;
      C.osc[0.0] = 0.0;
    } else {
      C.r0[d] = env_at(0.5 * d);
      C.osc[d] = env_at(d);
    }
  }
  return C;
}

// ---------------------------------------------------------------------------
// One-sided oscillation norms behind the sampling-density criterion:
//   x_side = sup_x ∫ sup_{|t|≤δ0/2} |K(x+t, y) − K(x, y)| dy
//   y_side = sup_y ∫ sup_{|t|≤δ0/2} |K(x, y+t) − K(x, y)| dx
// (row-sum and column-sum Schur factors; they coincide for symmetric kernels).
// The probe sup runs over a step-grid_resolution grid — one half period when
// the kernel is translation-periodic and reflection-even — and each integral
// is composite midpoint; the inner sup over t is exact for piecewise-affine
// columns (breakpoint crossings are enumerated) and sub-sampled with a
// Lipschitz pad otherwise.
// ---------------------------------------------------------------------------
struct OneSidedNorms {
  double x_side = 0.0;
  double y_side = 0.0;
};

namespace detail {

// sup over |t| ≤ w of |f(u0 + t) − f(u0)| along one kernel argument, where the
// slice u ↦ K(u, v) (axis 0) or v ↦ K(u, v) (axis 1) is piecewise affine with
// breakpoints on the supplied lattice (fast path) or the family breakpoints.
template <typename Eval>
inline double sup_shift(Eval&& f, double u0, double w, const double* cuts, int ncuts,
                        double base)
{
  double best = std::abs(f(u0 - w) - base);
  best = std::max(best, std::abs(f(u0 + w) - base));
  for (int i = 0; i < ncuts; ++i) best = std::max(best, std::abs(f(cuts[i]) - base));
  return best;
}

inline int lattice_cuts(double a, double b, double step, double* out, int cap)
{
  int n = 0;
  for (long k = static_cast<long>(std::ceil(a / step)); k * step < b && n < cap; ++k) {
    double v = static_cast<double>(k) * step;
    if (v > a && v < b) out[n++] = v;
  }
  return n;
}

} // namespace detail

inline OneSidedNorms one_sided_modulus_norms(const Kernel& K, double delta0)
{
  if (!(delta0 > 0.0))
    throw std::invalid_argument("one_sided_modulus_norms: delta0 must be positive");
  const double w = 0.5 * delta0;
  const double res = K.grid_resolution;

  // probe abscissae: half a period when symmetry folds the rest away
  std::vector<double> probes;
  if (K.sweep_period > 0.0 && K.reflect_even) {
    long n = std::lround(0.5 * K.sweep_period / res);
    for (long j = 0; j <= n; ++j) probes.push_back(static_cast<double>(j) * res);
  } else {
    long n = std::lround((K.domain.hi[0] - K.domain.lo[0]) / res);
    for (long j = 0; j <= n; ++j)
      probes.push_back(K.domain.lo[0] + static_cast<double>(j) * res);
  }

  const double reach = detail::column_reach(K) + w + 1.0;
  const long ny = std::lround(2.0 * reach / res);

  // generic-path degree check: affine columns keep the t-candidates exact
  int basis_deg = 0, cok_deg = 0;
  if (!K.has_fast) {
    for (const auto& p : K.basis)
      for (const auto& c : p.coef) basis_deg = std::max(basis_deg, poly_degree(c));
    for (const auto& p : K.cokernel)
      for (const auto& c : p.coef) cok_deg = std::max(cok_deg, poly_degree(c));
  } else {
    basis_deg = cok_deg = 1;
  }
  detail::SlopeCache sc;
  if (basis_deg > 1 || cok_deg > 1) sc = detail::make_slope_cache(K);

  std::vector<double> sx(probes.size(), 0.0), sy(probes.size(), 0.0);
  parallel_for(probes.size(), [&](std::size_t pi) {
    const double a = probes[pi];
    double cuts[80];
    double accx = 0.0, accy = 0.0;
    for (long iy = 0; iy < ny; ++iy) {
      double y = a - reach + (static_cast<double>(iy) + 0.5) * res;

      // oscillate the first argument at (a, y)
      {
        double base = K.eval_raw(a, y);
        int nc;
        if (K.has_fast)
          nc = detail::lattice_cuts(a - w, a + w, 1.0, cuts, 79);
        else {
          std::vector<double> v;
          K.basis_breaks_in(a - w, a + w, v);
          nc = static_cast<int>(std::min<std::size_t>(v.size(), 79));
          for (int c = 0; c < nc; ++c) cuts[c] = v[static_cast<std::size_t>(c)];
        }
        double best = detail::sup_shift([&](double u) { return K.eval_raw(u, y); }, a,
                                        w, cuts, nc, base);
        if (basis_deg > 1) {
          // curved pieces: refine between candidates and pad with the slope
          const int sub = 8;
          double worstgap = 2.0 * w / sub;
          for (int s = 1; s < sub; ++s) {
            double u = a - w + 2.0 * w * s / sub;
            best = std::max(best, std::abs(K.eval_raw(u, y) - base));
          }
          best += 0.5 * worstgap * detail::slope_bound(K, sc, a - w, a + w, y, y);
        }
        accx += best;
      }

      // oscillate the second argument at (y, a) — the column-sum factor
      {
        double base = K.eval_raw(y, a);
        int nc;
        if (K.has_fast)
          nc = detail::lattice_cuts(a - w, a + w, 1.0 / K.fast_n, cuts, 79);
        else {
          std::vector<double> v;
          K.cokernel_breaks_in(a - w, a + w, v);
          nc = static_cast<int>(std::min<std::size_t>(v.size(), 79));
          for (int c = 0; c < nc; ++c) cuts[c] = v[static_cast<std::size_t>(c)];
        }
        double best = detail::sup_shift([&](double vv) { return K.eval_raw(y, vv); },
                                        a, w, cuts, nc, base);
        if (cok_deg > 1) {
          const int sub = 8;
          double worstgap = 2.0 * w / sub;
          for (int s = 1; s < sub; ++s) {
            double vv = a - w + 2.0 * w * s / sub;
            best = std::max(best, std::abs(K.eval_raw(y, vv) - base));
          }
          best += 0.5 * worstgap * detail::slope_bound(K, sc, y, y, a - w, a + w);
        }
        accy += best;
      }
    }
    sx[pi] = accx * res;
    sy[pi] = accy * res;
  });

  OneSidedNorms out;
  for (double v : sx) out.x_side = std::max(out.x_side, v);
  for (double v : sy) out.y_side = std::max(out.y_side, v);
  return out;
}

// Geometric interpolation x_side^{1−1/p} · y_side^{1/p} of the two one-sided
// oscillation norms (the sampling-density contraction constant for L^p).
inline double r0_prime(const Kernel& K, double delta0, double p)
{
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("r0_prime: p must lie in [1, ∞]");
  OneSidedNorms n = one_sided_modulus_norms(K, delta0);
  double ip = std::isinf(p) ? 0.0 : 1.0 / p;
  return std::pow(n.x_side, 1.0 - ip) * std::pow(n.y_side, ip);
}

} // namespace rkss

#endif // RKSS_CONSTANTS_HPP
