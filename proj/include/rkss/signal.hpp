#ifndef RKSS_SIGNAL_HPP
#define RKSS_SIGNAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkss/geometry.hpp"
#include "rkss/kernel.hpp"
#include "rkss/rng.hpp"

namespace rkss {

// ---------------------------------------------------------------------------
// A signal in the range space: a coefficient vector over the kernel's
// materialized basis columns, f(x) = Σ_k coeffs[k]·φ_k(x).
// ---------------------------------------------------------------------------
struct Signal {
  const Kernel* kernel = nullptr;
  std::vector<double> coeffs;

  bool empty() const { return kernel == nullptr || coeffs.empty(); }
};

inline Signal make_signal(const Kernel& K, std::vector<double> coeffs)
{
  if (coeffs.size() != K.columns())
    throw std::invalid_argument("make_signal: coefficient count must match the basis");
  return Signal{&K, std::move(coeffs)};
}

inline Signal zero_signal(const Kernel& K)
{
  return Signal{&K, std::vector<double>(K.columns(), 0.0)};
}

// Pointwise evaluation by scanning the basis columns active at x.
inline double eval_signal(const Signal& f, double x)
{
  const Kernel& K = *f.kernel;
  double s = 0.0;
  auto it = std::lower_bound(K.basis_lo.begin(), K.basis_lo.end(), x - K.basis_maxw);
  for (std::size_t i = static_cast<std::size_t>(it - K.basis_lo.begin());
       i < K.columns() && K.basis_lo[i] <= x; ++i) {
    if (f.coeffs[i] != 0.0) s += f.coeffs[i] * K.basis[i].eval(x);
  }
  return s;
}

// Materialize f as a piecewise polynomial (for norms, plots, quadrature).
inline PiecewisePoly signal_to_piecewise(const Signal& f)
{
  std::vector<const PiecewisePoly*> parts;
  std::vector<double> w;
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
    if (f.coeffs[i] != 0.0) {
      parts.push_back(&f.kernel->basis[i]);
      w.push_back(f.coeffs[i]);
    }
  }
  if (parts.empty()) return PiecewisePoly{};
  return combine(w, parts);
}

// ---------------------------------------------------------------------------
// L^p norms of piecewise-polynomial functions.  p ∈ {1, 2} integrate exactly
// per cell (Gauss–Legendre on polynomial pieces, with |·| handled by root
// splitting); p = ∞ takes the exact piecewise supremum.  The method tag
// records how the value was produced.
// ---------------------------------------------------------------------------
struct NormValue {
  double value = 0.0;
  std::string method;
};

inline NormValue pp_norm(const PiecewisePoly& f, double p)
{
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("pp_norm: p must lie in [1, ∞]");
  if (f.empty()) return {0.0, "empty"};
  if (std::isinf(p)) return {f.sup_abs_all(), "exact-piecewise-sup"};
  if (p == 1.0) return {f.integrate_abs(f.lo(), f.hi()), "cell-gauss-legendre"};
  if (p == 2.0) return {std::sqrt(integrate_product(f, f)), "cell-gauss-legendre"};
  throw std::invalid_argument("pp_norm: only p in {1, 2, ∞} is supported");
}

inline NormValue signal_norm(const Signal& f, double p)
{
  return pp_norm(signal_to_piecewise(f), p);
}

// ℓ^p norm of a plain value vector (sample norms).
inline double lp_norm(const std::vector<double>& v, double p)
{
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("lp_norm: p must lie in [1, ∞]");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Random elements of the range space: uniform [−1, 1] coefficients on the
// columns whose basis support lies inside the evaluation window (so the
// reproducing identity holds exactly for them), zero elsewhere.  Fully
// deterministic in (seed, stream).
// ---------------------------------------------------------------------------
inline Signal random_signal(const Kernel& K, std::uint64_t seed, std::uint64_t stream)
{
  Signal f = zero_signal(K);
  const double lo = K.domain.lo[0], hi = K.domain.hi[0];
  for (std::size_t i = 0; i < K.columns(); ++i) {
    if (K.basis[i].lo() >= lo && K.basis[i].hi() <= hi)
      f.coeffs[i] = 2.0 * uniform01(seed, stream, i) - 1.0;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Samples of a function over a sampling set.
// ---------------------------------------------------------------------------
struct SampleVector {
  const SamplingSet* set = nullptr;
  std::vector<double> values;
};

inline SampleVector sample_signal(const Signal& f, const SamplingSet& G)
{
  SampleVector s;
  s.set = &G;
  s.values.resize(G.size());
  for (std::size_t i = 0; i < G.size(); ++i)
    s.values[i] = eval_signal(f, G.coord(i));
  return s;
}

} // namespace rkss

#endif // RKSS_SIGNAL_HPP
