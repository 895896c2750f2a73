#ifndef RKSS_GEOMETRY_HPP
#define RKSS_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkss/rng.hpp"

namespace rkss {

// Axis-aligned box, half-open: [lo_j, hi_j) in every coordinate.
struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }

  double volume() const
  {
    double v = 1.0;
    for (std::size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
    return v;
  }

  // Half-open membership: the convention for all coverage sweeps and weights.
  bool contains(const std::vector<double>& x) const
  {
    for (std::size_t j = 0; j < lo.size(); ++j)
      if (x[j] < lo[j] || x[j] >= hi[j]) return false;
    return true;
  }

  // Closed membership: sampling points may sit on the far edge.
  bool contains_closed(const std::vector<double>& x) const
  {
    for (std::size_t j = 0; j < lo.size(); ++j)
      if (x[j] < lo[j] || x[j] > hi[j]) return false;
    return true;
  }

  double max_width() const
  {
    double w = 0.0;
    for (std::size_t j = 0; j < lo.size(); ++j) w = std::max(w, hi[j] - lo[j]);
    return w;
  }

  static Box interval(double a, double b)
  {
    if (!(a < b)) throw std::invalid_argument("Box::interval: need a < b");
    return Box{{a}, {b}};
  }
};

// Finite point set on a bounded domain, sorted lexicographically.
struct SamplingSet {
  std::vector<std::vector<double>> points;
  Box domain;
  std::string method = "explicit";
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
  int dim() const { return domain.dim(); }
  double coord(std::size_t g) const { return points[g][0]; } // 1-D shorthand
};

inline SamplingSet make_sampling_set(std::vector<std::vector<double>> pts, Box domain,
                                     std::string method = "explicit",
                                     std::uint64_t seed = 0)
{
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    if (pts[i] == pts[i + 1])
      throw std::invalid_argument("make_sampling_set: points must be pairwise distinct");
  for (const auto& p : pts) {
    if (static_cast<int>(p.size()) != domain.dim())
      throw std::invalid_argument("make_sampling_set: point dimension mismatch");
    if (!domain.contains_closed(p))
      throw std::invalid_argument("make_sampling_set: point outside the domain");
  }
  return SamplingSet{std::move(pts), std::move(domain), std::move(method), seed};
}

struct GapCounts {
  std::int64_t min_count = 0; // inf over the domain of the cube-cover multiplicity
  std::int64_t max_count = 0; // sup over the domain of the same
};

namespace detail {

// Probe coordinates along one axis: the multiplicity function is constant on
// [c_i, c_{i+1}) for the sorted cut list, so the cuts themselves (plus the
// domain edge) enumerate every attained value.
inline std::vector<double> axis_probes(const std::vector<const std::vector<double>*>& pts,
                                       int axis, double lo, double hi, double half)
{
  std::vector<double> cuts{lo};
  for (const auto* p : pts) {
    double a = (*p)[axis] - half, b = (*p)[axis] + half;
    if (a > lo && a < hi) cuts.push_back(a);
    if (b > lo && b < hi) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

inline void gap_sweep(const std::vector<const std::vector<double>*>& active, int axis,
                      int dim, const Box& box, double half, std::int64_t& mn,
                      std::int64_t& mx)
{
  if (axis == dim) {
    auto n = static_cast<std::int64_t>(active.size());
    mn = std::min(mn, n);
    mx = std::max(mx, n);
    return;
  }
  auto probes = axis_probes(active, axis, box.lo[axis], box.hi[axis], half);
  for (double x : probes) {
    std::vector<const std::vector<double>*> next;
    next.reserve(active.size());
    for (const auto* p : active)
      if (x >= (*p)[axis] - half && x < (*p)[axis] + half) next.push_back(p);
    gap_sweep(next, axis + 1, dim, box, half, mn, mx);
  }
}

} // namespace detail

// Extremes over the domain of x -> #{γ : x ∈ γ+[−δ/2,δ/2)^d}, computed by an
// exact sweep of the arrangement of cube boundaries.
inline GapCounts gap_counts(const SamplingSet& set, double delta)
{
  if (!(delta > 0.0)) throw std::invalid_argument("gap_counts: delta must be positive");
  if (set.points.empty()) return {0, 0};
  std::vector<const std::vector<double>*> all;
  all.reserve(set.points.size());
  for (const auto& p : set.points) all.push_back(&p);
  std::int64_t mn = std::numeric_limits<std::int64_t>::max(), mx = 0;
  detail::gap_sweep(all, 0, set.dim(), set.domain, delta / 2.0, mn, mx);
  return {mn, mx};
}

// Smallest δ whose cubes cover the whole domain (min_count ≥ 1), located by
// bisection to absolute resolution 1e−12.
inline double maximal_gap(const SamplingSet& set)
{
  if (set.points.empty())
    throw std::invalid_argument("maximal_gap: empty sampling set");
  double hi = 2.0 * set.domain.max_width();
  double lo = 0.0;
  if (gap_counts(set, hi).min_count < 1)
    throw std::logic_error("maximal_gap: covering bound violated");
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    if (gap_counts(set, mid).min_count >= 1) hi = mid; else lo = mid;
  }
  return hi;
}

// Perturbed lattice δZ^d ∩ domain with per-coordinate jitter in
// [−jitter·δ, jitter·δ], clamped into the (half-open) domain.
inline SamplingSet generate_jittered(double delta, double jitter, const Box& domain,
                                     std::uint64_t seed)
{
  if (!(delta > 0.0)) throw std::invalid_argument("generate_jittered: delta must be positive");
  if (!(jitter >= 0.0 && jitter < 0.5))
    throw std::invalid_argument("generate_jittered: jitter must lie in [0, 0.5)");
  int d = domain.dim();
  std::vector<std::int64_t> klo(d), khi(d);
  for (int j = 0; j < d; ++j) {
    klo[j] = static_cast<std::int64_t>(std::ceil(domain.lo[j] / delta - 1e-12));
    khi[j] = static_cast<std::int64_t>(std::floor(domain.hi[j] / delta + 1e-12));
    while (static_cast<double>(klo[j]) * delta < domain.lo[j]) ++klo[j];
    while (static_cast<double>(khi[j]) * delta > domain.hi[j]) --khi[j];
    if (khi[j] < klo[j])
      throw std::invalid_argument("generate_jittered: no lattice point inside the domain");
  }
  std::vector<std::vector<double>> pts;
  std::vector<std::int64_t> idx(klo);
  std::uint64_t linear = 0;
  for (;;) {
    std::vector<double> p(d);
    for (int j = 0; j < d; ++j) {
      double u = uniform01(seed, linear, static_cast<std::uint64_t>(j));
      double x = static_cast<double>(idx[j]) * delta + (2.0 * u - 1.0) * jitter * delta;
      x = std::max(x, domain.lo[j]);
      x = std::min(x, domain.hi[j]);
      p[j] = x;
    }
    pts.push_back(std::move(p));
    ++linear;
    int j = d - 1;
    while (j >= 0 && ++idx[j] > khi[j]) { idx[j] = klo[j]; --j; }
    if (j < 0) break;
  }
  return make_sampling_set(std::move(pts), domain, "jittered", seed);
}

} // namespace rkss

#endif // RKSS_GEOMETRY_HPP
