#ifndef RKSS_OPERATORS_HPP
#define RKSS_OPERATORS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkss/bupu.hpp"
#include "rkss/constants.hpp"
#include "rkss/parallel.hpp"
#include "rkss/signal.hpp"

namespace rkss {

// Thrown when an operation requires a contraction certificate that cannot be
// granted (and a measured fallback is unavailable or also fails).
struct certificate_error : std::runtime_error {
  double measured = std::numeric_limits<double>::quiet_NaN();
  explicit certificate_error(const std::string& msg, double measured_ratio)
      : std::runtime_error(msg), measured(measured_ratio)
  {
  }
};

// ---------------------------------------------------------------------------
// T g: project a function onto the range space, c_k = ∫ κ_k(y) g(y) dy.
// The piecewise-polynomial overload integrates exactly on the merged
// breakpoint grid; the plain-function overload has no breakpoint information
// and falls back to a fixed fine partition (flagged through `fallback`).
// ---------------------------------------------------------------------------
inline Signal apply_T(const Kernel& K, const PiecewisePoly& g)
{
  Signal out = zero_signal(K);
  for (std::size_t k = 0; k < K.columns(); ++k)
    out.coeffs[k] = integrate_product(K.cokernel[k], g);
  return out;
}

inline Signal apply_T(const Kernel& K, const Signal& f)
{
  return apply_T(K, signal_to_piecewise(f));
}

inline Signal apply_T(const Kernel& K, const std::function<double(double)>& g,
                      double cell_width = 0.02, bool* fallback = nullptr)
{
  if (!(cell_width > 0.0)) throw std::invalid_argument("apply_T: bad cell width");
  if (fallback) *fallback = true; // no breakpoint info: fixed fine partition
  Signal out = zero_signal(K);
  parallel_for(K.columns(), [&](std::size_t k) {
    const PiecewisePoly& kk = K.cokernel[k];
    std::vector<double> cells = kk.breaks;
    long n = std::max<long>(1, std::lround((kk.hi() - kk.lo()) / cell_width));
    for (long j = 1; j < n; ++j)
      cells.push_back(kk.lo() + (kk.hi() - kk.lo()) * static_cast<double>(j) /
                                    static_cast<double>(n));
    std::sort(cells.begin(), cells.end());
    out.coeffs[k] = gl8_integrate([&](double y) { return kk.eval(y) * g(y); }, cells,
                                  kk.lo(), kk.hi());
  });
  return out;
}

// ---------------------------------------------------------------------------
// Precomputed sampling operators over (K, Γ, U):
//   TU — coefficients of T u_γ          (columns indexed by γ)
//   KG — coefficients of K(·, γ)        (frame columns)
//   E  — basis evaluations at the γ     (E·coeffs = (f(γ))_γ)
//   A  — discrete iteration matrix (T u_{γ'})(γ) = E·TU
// ---------------------------------------------------------------------------
struct OperatorBundle {
  const Kernel* kernel = nullptr;
  const Bupu* bupu = nullptr;
  Eigen::MatrixXd TU, KG, E, A;
  Eigen::VectorXd masses;

  std::size_t samples() const { return static_cast<std::size_t>(E.rows()); }
  const SamplingSet& set() const { return bupu->set; }
};

inline OperatorBundle build_bundle(const Kernel& K, const SamplingSet& G, const Bupu& U)
{
  if (G.size() != U.size())
    throw std::invalid_argument("build_bundle: BUPU size does not match the sampling set");
  for (std::size_t i = 0; i < G.size(); ++i)
    if (G.coord(i) != U.set.coord(i))
      throw std::invalid_argument("build_bundle: BUPU was built over a different set");
  if (G.dim() != 1)
    throw std::invalid_argument("build_bundle: one-dimensional sets only");

  const auto ng = static_cast<Eigen::Index>(G.size());
  const auto nc = static_cast<Eigen::Index>(K.columns());

  OperatorBundle B;
  B.kernel = &K;
  B.bupu = &U;
  B.TU.resize(nc, ng);
  B.KG.resize(nc, ng);
  B.E.resize(ng, nc);
  B.masses.resize(ng);

  parallel_for(G.size(), [&](std::size_t g) {
    const auto j = static_cast<Eigen::Index>(g);
    const double y = G.coord(g);
    for (Eigen::Index k = 0; k < nc; ++k) {
      B.TU(k, j) = U.integrate_against(g, K.cokernel[static_cast<std::size_t>(k)]);
      B.KG(k, j) = K.cokernel[static_cast<std::size_t>(k)].eval(y);
      B.E(j, k) = K.basis[static_cast<std::size_t>(k)].eval(y);
    }
    B.masses(j) = U.masses[g];
  });
  B.A = B.E * B.TU;
  return B;
}

namespace detail {

inline Eigen::Map<const Eigen::VectorXd> as_vec(const std::vector<double>& v)
{
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

inline std::vector<double> to_std(const Eigen::VectorXd& v)
{
  return {v.data(), v.data() + v.size()};
}

} // namespace detail

// Samples of a coefficient signal at the bundle's points: E·coeffs.
inline std::vector<double> bundle_samples(const OperatorBundle& B, const Signal& f)
{
  return detail::to_std(B.E * detail::as_vec(f.coeffs));
}

// Q f = Σ_γ f(γ) u_γ − f, returned as a piecewise object.
inline PiecewisePoly apply_Q(const OperatorBundle& B, const Signal& f)
{
  std::vector<double> fv = bundle_samples(B, f);
  std::vector<PiecewisePoly> held;
  held.reserve(B.bupu->size());
  std::vector<const PiecewisePoly*> parts;
  std::vector<double> w;
  for (std::size_t g = 0; g < B.bupu->size(); ++g) {
    if (fv[g] == 0.0) continue;
    held.push_back(B.bupu->weight_function(g));
    w.push_back(fv[g]);
  }
  for (const auto& h : held) parts.push_back(&h);
  PiecewisePoly fp = signal_to_piecewise(f);
  if (!fp.empty()) {
    parts.push_back(&fp);
    w.push_back(-1.0);
  }
  if (parts.empty()) return PiecewisePoly{};
  return combine(w, parts);
}

// P: sample values → Σ_γ v_γ · T u_γ (coefficients TU·v).
inline Signal apply_P(const OperatorBundle& B, const std::vector<double>& values)
{
  if (values.size() != B.samples())
    throw std::invalid_argument("apply_P: sample vector length mismatch");
  return Signal{B.kernel, detail::to_std(B.TU * detail::as_vec(values))};
}

// S: sample values → Σ_γ v_γ ‖u_γ‖₁ K(·, γ) (coefficients KG·(m ⊙ v)).
inline Signal apply_S(const OperatorBundle& B, const std::vector<double>& values)
{
  if (values.size() != B.samples())
    throw std::invalid_argument("apply_S: sample vector length mismatch");
  return Signal{B.kernel,
                detail::to_std(B.KG * B.masses.cwiseProduct(detail::as_vec(values)))};
}

// ---------------------------------------------------------------------------
// Neumann-series pseudo-inverse: T f0 + Σ_{n≥1} (T − op)^n f0, stopping when a
// term's sup norm falls below tol or nmax terms were taken.  Requires a
// contraction certificate < 1; without one the first measured term ratio must
// itself contract, and the result is flagged measured-only.
// ---------------------------------------------------------------------------
struct NeumannInfo {
  std::vector<double> term_norms; // ‖(T−op)^n f0‖_∞ for n = 1, 2, ...
  double certified_r = std::numeric_limits<double>::quiet_NaN();
  double measured_ratio = std::numeric_limits<double>::quiet_NaN();
  bool measured_only = false;
  int terms = 0;
};

inline Signal neumann_apply(const std::function<Signal(const Signal&)>& op,
                            const Signal& f0, int nmax, double tol, double certified_r,
                            NeumannInfo* info = nullptr)
{
  if (nmax < 0 || !(tol > 0.0)) throw std::invalid_argument("neumann_apply: bad controls");
  const Kernel& K = *f0.kernel;
  NeumannInfo local;
  local.certified_r = certified_r;

  auto minus = [](const Signal& a, const Signal& b) {
    Signal out = a;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] -= b.coeffs[i];
    return out;
  };

  Signal tf0 = apply_T(K, f0);
  Signal result = tf0;
  Signal term = minus(tf0, op(f0)); // (T − op) f0
  double prev = pp_norm(signal_to_piecewise(term), INFINITY).value;

  if (!(certified_r < 1.0)) {
    // no certificate: probe one more term and demand measured contraction
    Signal next = minus(apply_T(K, term), op(term));
    double nn = pp_norm(signal_to_piecewise(next), INFINITY).value;
    double ratio = nn / std::max(prev, 1e-300);
    if (prev > 0.0 && !(ratio < 1.0))
      throw certificate_error(
          "neumann_apply: no contraction certificate and measured term ratio " +
              std::to_string(ratio) + " does not contract",
          ratio);
    local.measured_only = true;
    local.measured_ratio = ratio;
  }

  for (int n = 1; n <= nmax; ++n) {
    local.term_norms.push_back(prev);
    local.terms = n;
    for (std::size_t i = 0; i < result.coeffs.size(); ++i)
      result.coeffs[i] += term.coeffs[i];
    if (prev < tol) break;
    if (n == nmax) break;
    term = minus(apply_T(K, term), op(term));
    prev = pp_norm(signal_to_piecewise(term), INFINITY).value;
  }
  if (info) *info = local;
  return result;
}

// ---------------------------------------------------------------------------
// Cell-averaged kernel: the second argument is averaged over the cells of the
// delta0-lattice, realized by replacing each cokernel with its per-cell mean
// (a step function).  The approximation defect of the induced operator is
// bounded by the radius-delta0 oscillation envelope when constants covering
// delta0 are supplied; certified marks that bound being < 1.
// ---------------------------------------------------------------------------
struct AveragedKernel {
  Kernel kernel;
  double defect_bound = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
};

inline AveragedKernel averaged_kernel(const Kernel& K, double delta0,
                                      const KernelConstants* constants = nullptr)
{
  if (!(delta0 > 0.0)) throw std::invalid_argument("averaged_kernel: delta0 must be positive");
  AveragedKernel out;
  out.kernel = K;
  out.kernel.has_fast = false;
  out.kernel.symmetric = false;
  out.kernel.sweep_period = 0.0;
  out.kernel.reflect_even = false;
  out.kernel.type = K.type + "+cell-averaged";
  out.kernel.params["average_delta0"] = delta0;

  for (std::size_t k = 0; k < K.columns(); ++k) {
    const PiecewisePoly& kk = K.cokernel[k];
    const auto jlo = static_cast<long>(std::floor(kk.lo() / delta0));
    const auto jhi = static_cast<long>(std::ceil(kk.hi() / delta0));
    PiecewisePoly step;
    step.breaks.reserve(static_cast<std::size_t>(jhi - jlo + 1));
    step.coef.reserve(static_cast<std::size_t>(jhi - jlo));
    for (long j = jlo; j <= jhi; ++j) step.breaks.push_back(delta0 * static_cast<double>(j));
    for (long j = jlo; j < jhi; ++j) {
      double a = delta0 * static_cast<double>(j);
      double mean = kk.integrate(a, a + delta0) / delta0;
      step.coef.push_back({mean});
    }
    out.kernel.cokernel[k] = std::move(step);
  }
  out.kernel.finalize();

  if (constants) {
    out.defect_bound = constants->osc_of(delta0);
    out.certified = out.defect_bound < 1.0;
  }
  return out;
}

} // namespace rkss

#endif // RKSS_OPERATORS_HPP
