#ifndef RKSS_PIECEWISE_HPP
#define RKSS_PIECEWISE_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rkss {

// ---------------------------------------------------------------------------
// Dense polynomials in a local coordinate t, coef[j] multiplies t^j.
// ---------------------------------------------------------------------------

inline double poly_eval(const std::vector<double>& c, double t)
{
  double v = 0.0;
  for (std::size_t j = c.size(); j-- > 0;) v = v * t + c[j];
  return v;
}

inline std::vector<double> poly_derivative(const std::vector<double>& c)
{
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t j = 1; j < c.size(); ++j) d[j - 1] = c[j] * static_cast<double>(j);
  return d;
}

inline std::vector<double> poly_antiderivative(const std::vector<double>& c)
{
  std::vector<double> a(c.size() + 1, 0.0);
  for (std::size_t j = 0; j < c.size(); ++j) a[j + 1] = c[j] / static_cast<double>(j + 1);
  return a;
}

inline std::vector<double> poly_add(const std::vector<double>& a, const std::vector<double>& b)
{
  std::vector<double> r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t j = 0; j < a.size(); ++j) r[j] += a[j];
  for (std::size_t j = 0; j < b.size(); ++j) r[j] += b[j];
  return r;
}

inline std::vector<double> poly_scale(std::vector<double> a, double s)
{
  for (double& v : a) v *= s;
  return a;
}

// (a0 + a1 t) * p(t)
inline std::vector<double> poly_mul_linear(const std::vector<double>& p, double a0, double a1)
{
  std::vector<double> r(p.size() + 1, 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    r[j] += a0 * p[j];
    r[j + 1] += a1 * p[j];
  }
  return r;
}

// Re-express p(t) as q(s) with t = s + shift (Horner-style synthetic shift).
inline std::vector<double> poly_shift_var(const std::vector<double>& p, double shift)
{
  if (p.empty()) return {};
  std::vector<double> acc{p.back()};
  for (std::size_t j = p.size() - 1; j-- > 0;) {
    std::vector<double> next(acc.size() + 1, 0.0);
    for (std::size_t m = 0; m < acc.size(); ++m) {
      next[m + 1] += acc[m];
      next[m] += acc[m] * shift;
    }
    next[0] += p[j];
    acc = std::move(next);
  }
  acc.resize(p.size(), 0.0);
  return acc;
}

inline int poly_degree(const std::vector<double>& c, double tol = 0.0)
{
  for (std::size_t j = c.size(); j-- > 0;)
    if (std::abs(c[j]) > tol) return static_cast<int>(j);
  return -1; // zero polynomial
}

namespace detail {

inline void poly_roots_rec(const std::vector<double>& c, double a, double b,
                           std::vector<double>& out)
{
  int deg = poly_degree(c, 0.0);
  if (deg <= 0) return;
  if (deg == 1) {
    double r = -c[0] / c[1];
    if (r >= a && r <= b) out.push_back(r);
    return;
  }
  if (deg == 2) {
    double A = c[2], B = c[1], C = c[0];
    double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return;
    double sq = std::sqrt(disc);
    double q = (B >= 0.0) ? -0.5 * (B + sq) : -0.5 * (B - sq);
    double r1 = q / A;
    double r2 = (q != 0.0) ? C / q : r1;
    if (r1 > r2) std::swap(r1, r2);
    if (r1 >= a && r1 <= b) out.push_back(r1);
    if (r2 >= a && r2 <= b && r2 != r1) out.push_back(r2);
    return;
  }
  // Isolate by the critical points of c, then bisect sign changes.
  std::vector<double> crit;
  poly_roots_rec(poly_derivative(c), a, b, crit);
  crit.push_back(a);
  crit.push_back(b);
  std::sort(crit.begin(), crit.end());
  for (std::size_t i = 0; i + 1 < crit.size(); ++i) {
    double lo = crit[i], hi = crit[i + 1];
    if (hi - lo <= 0.0) continue;
    double flo = poly_eval(c, lo), fhi = poly_eval(c, hi);
    if (flo == 0.0) out.push_back(lo);
    if (flo * fhi >= 0.0) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
      double mid = 0.5 * (lo + hi);
      double fm = poly_eval(c, mid);
      if (fm == 0.0) { lo = hi = mid; break; }
      if (flo * fm < 0.0) hi = mid; else { lo = mid; flo = fm; }
    }
    out.push_back(0.5 * (lo + hi));
  }
  double fb = poly_eval(c, b);
  if (fb == 0.0) out.push_back(b);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double x, double y) { return std::abs(x - y) < 1e-14; }),
            out.end());
}

} // namespace detail

// Real roots of the polynomial (local coordinates) inside [a, b].
inline std::vector<double> poly_roots(const std::vector<double>& c, double a, double b)
{
  std::vector<double> out;
  detail::poly_roots_rec(c, a, b, out);
  return out;
}

// ---------------------------------------------------------------------------
// Piecewise polynomial on [breaks.front(), breaks.back()), zero outside.
// Piece i lives on [breaks[i], breaks[i+1]) with coefficients in the local
// coordinate t = x - breaks[i].  Pieces may be discontinuous across breaks.
// ---------------------------------------------------------------------------

struct PiecewisePoly {
  std::vector<double> breaks;             // size m+1, strictly increasing
  std::vector<std::vector<double>> coef;  // m pieces

  bool empty() const { return coef.empty(); }
  double lo() const { return breaks.front(); }
  double hi() const { return breaks.back(); }

  std::size_t piece_index(double x) const
  {
    // rightmost piece with breaks[i] <= x; assumes lo() <= x < hi()
    auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
    std::size_t i = static_cast<std::size_t>(it - breaks.begin());
    return (i == 0) ? 0 : i - 1;
  }

  double eval(double x) const
  {
    if (empty() || x < lo() || x >= hi()) return 0.0;
    std::size_t i = piece_index(x);
    if (i >= coef.size()) return 0.0;
    return poly_eval(coef[i], x - breaks[i]);
  }

  PiecewisePoly derivative() const
  {
    PiecewisePoly d;
    d.breaks = breaks;
    d.coef.reserve(coef.size());
    for (const auto& c : coef) d.coef.push_back(poly_derivative(c));
    return d;
  }

  // Exact integral over [a, b] (clipped to the support).
  double integrate(double a, double b) const
  {
    if (empty() || b <= a) return 0.0;
    a = std::max(a, lo());
    b = std::min(b, hi());
    if (b <= a) return 0.0;
    double total = 0.0;
    std::size_t i0 = piece_index(a);
    for (std::size_t i = i0; i < coef.size() && breaks[i] < b; ++i) {
      double ca = std::max(a, breaks[i]);
      double cb = std::min(b, breaks[i + 1]);
      if (cb <= ca) continue;
      auto anti = poly_antiderivative(coef[i]);
      total += poly_eval(anti, cb - breaks[i]) - poly_eval(anti, ca - breaks[i]);
    }
    return total;
  }

  double integrate_all() const { return empty() ? 0.0 : integrate(lo(), hi()); }

  // Exact integral of |f| over [a, b]: split pieces at sign changes.
  double integrate_abs(double a, double b) const
  {
    if (empty() || b <= a) return 0.0;
    a = std::max(a, lo());
    b = std::min(b, hi());
    if (b <= a) return 0.0;
    double total = 0.0;
    std::size_t i0 = piece_index(a);
    for (std::size_t i = i0; i < coef.size() && breaks[i] < b; ++i) {
      double ca = std::max(a, breaks[i]);
      double cb = std::min(b, breaks[i + 1]);
      if (cb <= ca) continue;
      std::vector<double> cuts{ca};
      for (double r : poly_roots(coef[i], ca - breaks[i], cb - breaks[i]))
        cuts.push_back(r + breaks[i]);
      cuts.push_back(cb);
      std::sort(cuts.begin(), cuts.end());
      auto anti = poly_antiderivative(coef[i]);
      for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        if (cuts[s + 1] <= cuts[s]) continue;
        double seg = poly_eval(anti, cuts[s + 1] - breaks[i]) -
                     poly_eval(anti, cuts[s] - breaks[i]);
        total += std::abs(seg);
      }
    }
    return total;
  }

  // Candidate abscissae of extrema over [a, b]: clipped piece endpoints plus
  // interior stationary points.  One-sided values at jumps are both covered
  // because each piece contributes its own endpoint evaluations.
  double sup_abs(double a, double b) const
  {
    if (empty()) return 0.0;
    a = std::max(a, lo());
    b = std::min(b, hi());
    if (b < a) return 0.0;
    double best = 0.0;
    std::size_t i0 = piece_index(std::min(a, hi() - 1e-300));
    for (std::size_t i = i0; i < coef.size() && breaks[i] <= b; ++i) {
      double ca = std::max(a, breaks[i]);
      double cb = std::min(b, breaks[i + 1]);
      if (cb < ca) continue;
      double tlo = ca - breaks[i], thi = cb - breaks[i];
      best = std::max(best, std::abs(poly_eval(coef[i], tlo)));
      best = std::max(best, std::abs(poly_eval(coef[i], thi)));
      if (poly_degree(coef[i]) >= 2)
        for (double r : poly_roots(poly_derivative(coef[i]), tlo, thi))
          best = std::max(best, std::abs(poly_eval(coef[i], r)));
    }
    return best;
  }

  double sup_abs_all() const { return empty() ? 0.0 : sup_abs(lo(), hi()); }

  // Exact min/max over [a, b], treating the function as 0 outside its support
  // when the window sticks out.
  std::pair<double, double> range(double a, double b) const
  {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    auto take = [&](double v) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    };
    if (empty() || a >= hi() || b <= lo()) { take(0.0); return {mn, mx}; }
    if (a < lo() || b > hi()) take(0.0);
    double ca0 = std::max(a, lo()), cb0 = std::min(b, hi());
    std::size_t i0 = piece_index(std::min(ca0, hi() - 1e-300));
    for (std::size_t i = i0; i < coef.size() && breaks[i] <= cb0; ++i) {
      double ca = std::max(ca0, breaks[i]);
      double cb = std::min(cb0, breaks[i + 1]);
      if (cb < ca) continue;
      double tlo = ca - breaks[i], thi = cb - breaks[i];
      take(poly_eval(coef[i], tlo));
      take(poly_eval(coef[i], thi));
      if (poly_degree(coef[i]) >= 2)
        for (double r : poly_roots(poly_derivative(coef[i]), tlo, thi))
          take(poly_eval(coef[i], r));
    }
    return {mn, mx};
  }

  PiecewisePoly translated(double dx) const
  {
    PiecewisePoly g = *this;
    for (double& bp : g.breaks) bp += dx;
    return g;
  }

  PiecewisePoly scaled(double s) const
  {
    PiecewisePoly g = *this;
    for (auto& c : g.coef) c = poly_scale(std::move(c), s);
    return g;
  }
};

// Merged breakpoint list (duplicates within tol collapsed).
inline std::vector<double> merge_breaks(const std::vector<const PiecewisePoly*>& parts,
                                        double tol = 1e-12)
{
  std::vector<double> all;
  for (const auto* p : parts)
    if (p && !p->empty()) all.insert(all.end(), p->breaks.begin(), p->breaks.end());
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double b : all)
    if (out.empty() || b - out.back() > tol) out.push_back(b);
  return out;
}

// Linear combination sum_i w[i] * f[i] materialized on the merged grid.
inline PiecewisePoly combine(const std::vector<double>& w,
                             const std::vector<const PiecewisePoly*>& parts)
{
  assert(w.size() == parts.size());
  PiecewisePoly out;
  out.breaks = merge_breaks(parts);
  if (out.breaks.size() < 2) return PiecewisePoly{};
  out.coef.assign(out.breaks.size() - 1, {0.0});
  for (std::size_t i = 0; i + 1 < out.breaks.size(); ++i) {
    double left = out.breaks[i];
    double mid = 0.5 * (left + out.breaks[i + 1]);
    for (std::size_t s = 0; s < parts.size(); ++s) {
      const PiecewisePoly* p = parts[s];
      if (!p || p->empty() || w[s] == 0.0) continue;
      if (mid < p->lo() || mid >= p->hi()) continue;
      std::size_t pi = p->piece_index(mid);
      // re-express the piece in the local coordinate of the merged cell
      auto shifted = poly_shift_var(p->coef[pi], left - p->breaks[pi]);
      out.coef[i] = poly_add(out.coef[i], poly_scale(std::move(shifted), w[s]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Composite Gauss-Legendre, 8 nodes per breakpoint cell (exact through
// polynomial degree 15, i.e. products of two degree-7 pieces).
// ---------------------------------------------------------------------------

struct GaussLegendre8 {
  static constexpr int n = 8;
  static constexpr double x[8] = {
      -0.9602898564975362316835609, -0.7966664774136267395915539,
      -0.5255324099163289858177390, -0.1834346424956498049394761,
      0.1834346424956498049394761,  0.5255324099163289858177390,
      0.7966664774136267395915539,  0.9602898564975362316835609};
  static constexpr double w[8] = {
      0.1012285362903762591525314, 0.2223810344533744705443560,
      0.3137066458778872873379622, 0.3626837833783619829651504,
      0.3626837833783619829651504, 0.3137066458778872873379622,
      0.2223810344533744705443560, 0.1012285362903762591525314};
};

// Integral over [a, b] of an arbitrary callable by composite GL8 over the
// cells induced by the supplied breakpoints.
template <typename F>
double gl8_integrate(F&& f, const std::vector<double>& cell_breaks, double a, double b)
{
  if (b <= a) return 0.0;
  std::vector<double> cuts{a};
  for (double c : cell_breaks)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double ca = cuts[i], cb = cuts[i + 1];
    if (cb - ca <= 0.0) continue;
    double h = 0.5 * (cb - ca), m = 0.5 * (ca + cb);
    double s = 0.0;
    for (int k = 0; k < GaussLegendre8::n; ++k)
      s += GaussLegendre8::w[k] * f(m + h * GaussLegendre8::x[k]);
    total += s * h;
  }
  return total;
}

// Exact integral of f*g over [a, b] (both piecewise polynomial).
inline double integrate_product(const PiecewisePoly& f, const PiecewisePoly& g,
                                double a, double b)
{
  if (f.empty() || g.empty()) return 0.0;
  a = std::max({a, f.lo(), g.lo()});
  b = std::min({b, f.hi(), g.hi()});
  if (b <= a) return 0.0;
  auto cells = merge_breaks({&f, &g});
  return gl8_integrate([&](double x) { return f.eval(x) * g.eval(x); }, cells, a, b);
}

inline double integrate_product(const PiecewisePoly& f, const PiecewisePoly& g)
{
  if (f.empty() || g.empty()) return 0.0;
  return integrate_product(f, g, std::max(f.lo(), g.lo()), std::min(f.hi(), g.hi()));
}

// ---------------------------------------------------------------------------
// Stock shapes.
// ---------------------------------------------------------------------------

// Tent of unit height centered at c with half-width hw (hat function when hw=1).
inline PiecewisePoly make_hat(double c = 0.0, double hw = 1.0)
{
  if (hw <= 0.0) throw std::invalid_argument("make_hat: half-width must be positive");
  PiecewisePoly p;
  p.breaks = {c - hw, c, c + hw};
  p.coef = {{0.0, 1.0 / hw}, {1.0, -1.0 / hw}};
  return p;
}

inline PiecewisePoly make_indicator(double a, double b)
{
  if (b <= a) throw std::invalid_argument("make_indicator: empty interval");
  PiecewisePoly p;
  p.breaks = {a, b};
  p.coef = {{1.0}};
  return p;
}

// Normalized B-spline of degree n on knots[i..i+n+1] (Cox-de Boor on the
// piecewise representation; the family sums to one between interior knots).
inline PiecewisePoly make_bspline(int degree, const std::vector<double>& knots)
{
  if (degree < 0) throw std::invalid_argument("make_bspline: negative degree");
  if (static_cast<int>(knots.size()) != degree + 2)
    throw std::invalid_argument("make_bspline: need degree+2 knots");
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    if (!(knots[i] < knots[i + 1]))
      throw std::invalid_argument("make_bspline: knots must be strictly increasing");

  // order-0 seeds: indicators of knot cells
  std::vector<PiecewisePoly> cur;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    cur.push_back(make_indicator(knots[i], knots[i + 1]));

  for (int k = 1; k <= degree; ++k) {
    std::vector<PiecewisePoly> next;
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      double den1 = knots[i + k] - knots[i];
      double den2 = knots[i + k + 1] - knots[i + 1];
      // left factor (x - knots[i])/den1, right factor (knots[i+k+1] - x)/den2
      PiecewisePoly a = cur[i];
      for (std::size_t pc = 0; pc < a.coef.size(); ++pc) {
        double t0 = a.breaks[pc] - knots[i]; // x = breaks[pc] + t
        a.coef[pc] = poly_scale(poly_mul_linear(a.coef[pc], t0, 1.0), 1.0 / den1);
      }
      PiecewisePoly b = cur[i + 1];
      for (std::size_t pc = 0; pc < b.coef.size(); ++pc) {
        double t0 = knots[i + k + 1] - b.breaks[pc];
        b.coef[pc] = poly_scale(poly_mul_linear(b.coef[pc], t0, -1.0), 1.0 / den2);
      }
      next.push_back(combine({1.0, 1.0}, {&a, &b}));
    }
    cur = std::move(next);
  }
  return cur.front();
}

} // namespace rkss

#endif // RKSS_PIECEWISE_HPP
