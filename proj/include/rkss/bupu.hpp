#ifndef RKSS_BUPU_HPP
#define RKSS_BUPU_HPP

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rkss/geometry.hpp"
#include "rkss/piecewise.hpp"

namespace rkss {

// Bounded uniform partition of unity subordinate to a sampling set: either
// multiplicity-normalized cube indicators or Voronoi cell indicators.  Weight
// functions are piecewise constant; masses are their exact integrals.
struct Bupu {
  enum class Kind { indicator, voronoi };

  Kind kind = Kind::indicator;
  SamplingSet set;
  double delta = 0.0;             // covering parameter: supp u_γ ⊆ γ+[−δ/2,δ/2]^d
  std::vector<double> masses;     // ‖u_γ‖_1
  std::vector<bool> boundary;     // support touches the domain boundary

  // 1-D only: exact integration cells (a, b, weight) per γ with u_γ = weight
  // constant on [a, b).
  std::vector<std::vector<std::array<double, 3>>> cells1d;

  std::size_t size() const { return set.size(); }

  // Nonzero weights at a point; weights always sum to one inside the domain.
  std::vector<std::pair<std::size_t, double>> weights_at(const std::vector<double>& x) const
  {
    std::vector<std::pair<std::size_t, double>> out;
    if (!set.domain.contains(x)) return out;
    if (kind == Kind::indicator) {
      double half = delta / 2.0;
      std::vector<std::size_t> cover;
      for (std::size_t g = 0; g < set.size(); ++g) {
        bool in = true;
        for (int j = 0; j < set.dim(); ++j) {
          double c = set.points[g][j];
          if (x[j] < c - half || x[j] >= c + half) { in = false; break; }
        }
        if (in) cover.push_back(g);
      }
      if (cover.empty()) return out;
      double w = 1.0 / static_cast<double>(cover.size());
      for (std::size_t g : cover) out.emplace_back(g, w);
    } else {
      std::size_t best = 0;
      double bestd = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < set.size(); ++g) {
        double d2 = 0.0;
        for (int j = 0; j < set.dim(); ++j) {
          double t = x[j] - set.points[g][j];
          d2 += t * t;
        }
        if (d2 < bestd) { bestd = d2; best = g; } // ties keep the lower index
      }
      out.emplace_back(best, 1.0);
    }
    return out;
  }

  double eval(std::size_t g, const std::vector<double>& x) const
  {
    for (const auto& [gi, w] : weights_at(x))
      if (gi == g) return w;
    return 0.0;
  }

  // Exact ∫ u_γ f for piecewise-polynomial f (1-D sets only).
  double integrate_against(std::size_t g, const PiecewisePoly& f) const
  {
    if (set.dim() != 1)
      throw std::logic_error("Bupu::integrate_against: only 1-D supported");
    double s = 0.0;
    for (const auto& c : cells1d[g]) s += c[2] * f.integrate(c[0], c[1]);
    return s;
  }

  // u_γ as a piecewise-constant function (1-D sets only).
  PiecewisePoly weight_function(std::size_t g) const
  {
    if (set.dim() != 1)
      throw std::logic_error("Bupu::weight_function: only 1-D supported");
    PiecewisePoly p;
    const auto& cs = cells1d[g];
    if (cs.empty()) return p;
    for (const auto& c : cs) {
      if (p.breaks.empty()) {
        p.breaks = {c[0], c[1]};
        p.coef = {{c[2]}};
      } else {
        if (c[0] > p.breaks.back() + 1e-14) {
          p.breaks.push_back(c[0]);
          p.coef.push_back({0.0});
        }
        p.breaks.push_back(c[1]);
        p.coef.push_back({c[2]});
      }
    }
    return p;
  }
};

namespace detail {

// Arrangement sweep shared by indicator-BUPU mass computation (d ≤ 2 exact,
// higher d by the same recursion).
inline void indicator_masses_rec(const SamplingSet& set, double half, int axis,
                                 std::vector<std::size_t>& active, double cell_vol,
                                 std::vector<double>& lo_corner,
                                 std::vector<double>& masses,
                                 std::vector<std::vector<std::array<double, 3>>>* cells1d)
{
  const Box& box = set.domain;
  std::vector<double> cuts{box.lo[axis], box.hi[axis]};
  for (std::size_t g : active) {
    double a = set.points[g][axis] - half, b = set.points[g][axis] + half;
    if (a > box.lo[axis] && a < box.hi[axis]) cuts.push_back(a);
    if (b > box.lo[axis] && b < box.hi[axis]) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    double mid = 0.5 * (a + b);
    std::vector<std::size_t> next;
    for (std::size_t g : active) {
      double c = set.points[g][axis];
      if (mid >= c - half && mid < c + half) next.push_back(g);
    }
    if (next.empty()) continue;
    if (axis + 1 == set.dim()) {
      double w = 1.0 / static_cast<double>(next.size());
      double v = cell_vol * (b - a) * w;
      for (std::size_t g : next) masses[g] += v;
      if (cells1d)
        for (std::size_t g : next) (*cells1d)[g].push_back({a, b, w});
    } else {
      lo_corner[axis] = a;
      indicator_masses_rec(set, half, axis + 1, next, cell_vol * (b - a), lo_corner,
                           masses, cells1d);
    }
  }
}

} // namespace detail

// Smallest usable cube width at least the nominal one.  Rounded point
// coordinates can leave one-ulp slivers uncovered, so when the nominal width
// fails the exact covering test this falls back to the measured maximal gap,
// inflated by a relative 1e-9 to make the covering strict.
inline double covering_delta(const SamplingSet& set, double nominal)
{
  if (!(nominal > 0.0))
    throw std::invalid_argument("covering_delta: nominal width must be positive");
  if (gap_counts(set, nominal).min_count >= 1) return nominal;
  double g = maximal_gap(set) * (1.0 + 1e-9);
  return std::max(nominal, g);
}

// Multiplicity-normalized cube-indicator BUPU:
//   u_γ(x) = χ_{γ+[−δ/2,δ/2)^d}(x) / #{γ′ : x ∈ γ′+[−δ/2,δ/2)^d}.
inline Bupu normalized_indicator_bupu(const SamplingSet& set, double delta)
{
  if (!(delta > 0.0))
    throw std::invalid_argument("normalized_indicator_bupu: delta must be positive");
  if (gap_counts(set, delta).min_count < 1)
    throw std::invalid_argument(
        "normalized_indicator_bupu: delta is not a gap of the sampling set "
        "(cubes fail to cover the domain)");
  Bupu u;
  u.kind = Bupu::Kind::indicator;
  u.set = set;
  u.delta = delta;
  u.masses.assign(set.size(), 0.0);
  u.boundary.assign(set.size(), false);
  double half = delta / 2.0;
  for (std::size_t g = 0; g < set.size(); ++g)
    for (int j = 0; j < set.dim(); ++j)
      if (set.points[g][j] - half < set.domain.lo[j] ||
          set.points[g][j] + half > set.domain.hi[j])
        u.boundary[g] = true;
  std::vector<std::size_t> all(set.size());
  for (std::size_t g = 0; g < set.size(); ++g) all[g] = g;
  std::vector<double> lo_corner(set.dim(), 0.0);
  if (set.dim() == 1) {
    u.cells1d.assign(set.size(), {});
    detail::indicator_masses_rec(set, half, 0, all, 1.0, lo_corner, u.masses,
                                 &u.cells1d);
  } else {
    detail::indicator_masses_rec(set, half, 0, all, 1.0, lo_corner, u.masses, nullptr);
  }
  return u;
}

namespace detail {

struct Poly2 {
  std::vector<std::array<double, 2>> v; // counter-clockwise vertices
};

// Clip a convex polygon by the half-plane n·x ≤ c.
inline Poly2 clip_halfplane(const Poly2& p, double nx, double ny, double c)
{
  Poly2 out;
  std::size_t n = p.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = p.v[i];
    const auto& b = p.v[(i + 1) % n];
    double da = nx * a[0] + ny * a[1] - c;
    double db = nx * b[0] + ny * b[1] - c;
    if (da <= 0.0) out.v.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      double t = da / (da - db);
      out.v.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
    }
  }
  return out;
}

inline double polygon_area(const Poly2& p)
{
  double s = 0.0;
  std::size_t n = p.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = p.v[i];
    const auto& b = p.v[(i + 1) % n];
    s += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * std::abs(s);
}

} // namespace detail

// Voronoi-cell indicator BUPU; δ is derived as twice the largest sup-norm
// distance from a point to its own (domain-clipped) cell.
inline Bupu voronoi_bupu(const SamplingSet& set)
{
  if (set.points.empty()) throw std::invalid_argument("voronoi_bupu: empty sampling set");
  if (set.dim() > 2)
    throw std::invalid_argument("voronoi_bupu: dimensions above 2 are not supported");
  Bupu u;
  u.kind = Bupu::Kind::voronoi;
  u.set = set;
  u.masses.assign(set.size(), 0.0);
  u.boundary.assign(set.size(), false);
  double reach = 0.0;
  if (set.dim() == 1) {
    u.cells1d.assign(set.size(), {});
    double lo = set.domain.lo[0], hi = set.domain.hi[0];
    for (std::size_t g = 0; g < set.size(); ++g) {
      double a = (g == 0) ? lo : 0.5 * (set.coord(g - 1) + set.coord(g));
      double b = (g + 1 == set.size()) ? hi : 0.5 * (set.coord(g) + set.coord(g + 1));
      a = std::max(a, lo);
      b = std::min(b, hi);
      if (b <= a) { u.boundary[g] = true; continue; }
      u.cells1d[g].push_back({a, b, 1.0});
      u.masses[g] = b - a;
      reach = std::max({reach, set.coord(g) - a, b - set.coord(g)});
      if (a == lo || b == hi) u.boundary[g] = true;
    }
  } else {
    const Box& box = set.domain;
    for (std::size_t g = 0; g < set.size(); ++g) {
      detail::Poly2 cell;
      cell.v = {{box.lo[0], box.lo[1]},
                {box.hi[0], box.lo[1]},
                {box.hi[0], box.hi[1]},
                {box.lo[0], box.hi[1]}};
      const auto& p = set.points[g];
      for (std::size_t h = 0; h < set.size() && !cell.v.empty(); ++h) {
        if (h == g) continue;
        const auto& q = set.points[h];
        double nx = q[0] - p[0], ny = q[1] - p[1];
        double c = 0.5 * (q[0] * q[0] - p[0] * p[0] + q[1] * q[1] - p[1] * p[1]);
        cell = detail::clip_halfplane(cell, nx, ny, c);
      }
      u.masses[g] = detail::polygon_area(cell);
      for (const auto& v : cell.v) {
        reach = std::max({reach, std::abs(v[0] - p[0]), std::abs(v[1] - p[1])});
        if (std::abs(v[0] - box.lo[0]) < 1e-12 || std::abs(v[0] - box.hi[0]) < 1e-12 ||
            std::abs(v[1] - box.lo[1]) < 1e-12 || std::abs(v[1] - box.hi[1]) < 1e-12)
          u.boundary[g] = true;
      }
    }
  }
  u.delta = 2.0 * reach;
  return u;
}

// Largest partition-of-unity residual over random probe points.
inline double pou_residual(const Bupu& u, std::size_t probes, std::uint64_t seed)
{
  double worst = 0.0;
  int d = u.set.dim();
  for (std::size_t i = 0; i < probes; ++i) {
    std::vector<double> x(d);
    for (int j = 0; j < d; ++j) {
      double t = uniform01(seed, i, static_cast<std::uint64_t>(j));
      x[j] = u.set.domain.lo[j] + t * (u.set.domain.hi[j] - u.set.domain.lo[j]);
    }
    double s = 0.0;
    for (const auto& [g, w] : u.weights_at(x)) { (void)g; s += w; }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

// L^p norm of the step function Σ_γ coef_γ u_γ, assembled exactly from the
// partition's one-dimensional cells by a breakpoint sweep.
inline double combination_norm(const Bupu& u, const std::vector<double>& coef, double p)
{
  if (coef.size() != u.size())
    throw std::invalid_argument("combination_norm: coefficient length mismatch");
  if (u.set.dim() != 1 || u.cells1d.empty())
    throw std::invalid_argument("combination_norm: one-dimensional partitions only");
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("combination_norm: p must lie in [1, ∞]");

  std::vector<std::pair<double, double>> ev; // (x, jump of the running value)
  for (std::size_t g = 0; g < u.size(); ++g) {
    if (coef[g] == 0.0) continue;
    for (const auto& cell : u.cells1d[g]) {
      double v = coef[g] * cell[2];
      if (v == 0.0) continue;
      ev.emplace_back(cell[0], v);
      ev.emplace_back(cell[1], -v);
    }
  }
  if (ev.empty()) return 0.0;
  std::sort(ev.begin(), ev.end());

  double cur = 0.0, acc = 0.0, x = ev.front().first;
  for (const auto& [t, jump] : ev) {
    if (t > x) {
      if (std::isinf(p))
        acc = std::max(acc, std::abs(cur));
      else
        acc += std::pow(std::abs(cur), p) * (t - x);
      x = t;
    }
    cur += jump;
  }
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

} // namespace rkss

#endif // RKSS_BUPU_HPP
