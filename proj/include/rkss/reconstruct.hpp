#ifndef RKSS_RECONSTRUCT_HPP
#define RKSS_RECONSTRUCT_HPP

// Iterative reconstruction from irregular samples: the correction iteration
// driven by the smoothed-partition quasi-interpolant (continuous and discrete
// forms), the preconditioned frame iteration, and the decibel stopping rules.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkss/operators.hpp"
#include "rkss/signal.hpp"

namespace rkss {

enum class StopReason { tolerance, nmax, stopping_rule, diverged };

inline const char* to_string(StopReason s)
{
  switch (s) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::nmax: return "nmax";
    case StopReason::stopping_rule: return "stopping_rule";
    case StopReason::diverged: return "diverged";
  }
  return "unknown";
}

struct IterationStep {
  int n = 0;
  double increment = 0.0; // L^p norm of the correction added at this step
  double residual = 0.0;  // sup_γ |c0(γ) − f_n(γ)| after the step
  double ratio = std::numeric_limits<double>::quiet_NaN(); // vs previous increment
};

struct IterationTrace {
  std::vector<IterationStep> steps;
  StopReason stop_reason = StopReason::nmax;
  double certified_r = std::numeric_limits<double>::quiet_NaN();
  bool measured_only = false;

  const IterationStep& back() const { return steps.back(); }
};

// Thrown when increments grow for three consecutive steps; carries the trace
// accumulated so far (its stop_reason is set to diverged).
struct divergence_error : std::runtime_error {
  IterationTrace trace;
  divergence_error(const std::string& msg, IterationTrace t)
      : std::runtime_error(msg), trace(std::move(t))
  {
  }
};

struct ApResult {
  Signal signal;
  IterationTrace trace;
};

struct DiscreteResult {
  std::vector<double> values;
  IterationTrace trace;
};

namespace detail {

// Shared driver: records step 0, then runs correction steps produced by
// `advance` (returning {increment, residual}) under the common stopping and
// divergence rules.  fixed_steps ≥ 0 runs exactly that many corrections.
template <class Advance>
IterationTrace run_trace(int nmax, double tol, double certified_r, int fixed_steps,
                         double inc0, double resid0, Advance&& advance)
{
  if (nmax < 0 || !(tol > 0.0))
    throw std::invalid_argument("reconstruct: nmax must be ≥ 0 and tol > 0");

  IterationTrace tr;
  tr.certified_r = certified_r;
  tr.measured_only = !(certified_r < 1.0);
  tr.steps.push_back({0, inc0, resid0, std::numeric_limits<double>::quiet_NaN()});

  const bool fixed = fixed_steps >= 0;
  const int total = fixed ? fixed_steps : nmax;
  const double tiny = 1e-300;
  const double thresh = 0.25 * tol * std::max(inc0, tiny);

  if (!fixed && inc0 == 0.0) { // zero input: step 0 is already the fixed point
    tr.stop_reason = StopReason::tolerance;
    return tr;
  }

  double prev = inc0;
  int growing = 0;
  for (int n = 1; n <= total; ++n) {
    auto [inc, resid] = advance();
    double ratio = inc / std::max(prev, tiny);
    tr.steps.push_back({n, inc, resid, ratio});
    if (ratio > 1.0) {
      if (++growing >= 3) {
        tr.stop_reason = StopReason::diverged;
        throw divergence_error("iteration diverged: increment ratio " +
                                   std::to_string(ratio) +
                                   " exceeded one for three consecutive steps",
                               tr);
      }
    } else {
      growing = 0;
    }
    prev = inc;
    if (!fixed && inc <= thresh) {
      tr.stop_reason = StopReason::tolerance;
      return tr;
    }
  }
  tr.stop_reason = fixed ? StopReason::stopping_rule : StopReason::nmax;
  return tr;
}

inline double sup_residual(const std::vector<double>& c0, const Eigen::VectorXd& fv)
{
  double m = 0.0;
  for (std::size_t i = 0; i < c0.size(); ++i)
    m = std::max(m, std::abs(c0[i] - fv(static_cast<Eigen::Index>(i))));
  return m;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Correction iteration in coefficient space:
//   f_0 = Σ c0(γ) T u_γ,   f_n = f_{n−1} + (f_0 − Σ f_{n−1}(γ) T u_γ).
// Increments are L^p norms of the added corrections; residuals are sup norms
// of c0 − (f_n(γ))_γ.  fixed_steps ≥ 0 runs exactly that many corrections
// (stop_reason = stopping_rule); otherwise stops once an increment falls
// below 0.25·tol·‖f_0‖_p, or at nmax.
// ---------------------------------------------------------------------------
inline ApResult ap_reconstruct(const OperatorBundle& B, const std::vector<double>& c0,
                               int nmax, double tol, double p = INFINITY,
                               double certified_r = std::numeric_limits<double>::quiet_NaN(),
                               int fixed_steps = -1)
{
  if (c0.size() != B.samples())
    throw std::invalid_argument("ap_reconstruct: sample vector length mismatch");

  Eigen::VectorXd c = detail::as_vec(c0);
  Eigen::VectorXd f0 = B.TU * c; // coefficients of Σ c0(γ) T u_γ
  Eigen::VectorXd f = f0;

  auto norm_of = [&](const Eigen::VectorXd& v) {
    return signal_norm(Signal{B.kernel, detail::to_std(v)}, p).value;
  };

  double inc0 = norm_of(f0);
  double resid0 = detail::sup_residual(c0, B.E * f);

  IterationTrace tr = detail::run_trace(nmax, tol, certified_r, fixed_steps, inc0,
                                        resid0, [&]() -> std::pair<double, double> {
                                          Eigen::VectorXd corr = f0 - B.TU * (B.E * f);
                                          f += corr;
                                          return {norm_of(corr),
                                                  detail::sup_residual(c0, B.E * f)};
                                        });
  return {Signal{B.kernel, detail::to_std(f)}, std::move(tr)};
}

// ---------------------------------------------------------------------------
// Discrete form of the correction iteration on sample values:
//   F_0 = A c0,   F_n = F_{n−1} + A (c0 − F_{n−1}).
// Increments are measured in the partition norm ‖Σ d_γ u_γ‖_p.
// ---------------------------------------------------------------------------
inline DiscreteResult ap_discrete(const OperatorBundle& B, const std::vector<double>& c0,
                                  int nmax, double tol, double p = INFINITY,
                                  double certified_r = std::numeric_limits<double>::quiet_NaN(),
                                  int fixed_steps = -1)
{
  if (c0.size() != B.samples())
    throw std::invalid_argument("ap_discrete: sample vector length mismatch");

  Eigen::VectorXd c = detail::as_vec(c0);
  Eigen::VectorXd F = B.A * c;

  auto norm_of = [&](const Eigen::VectorXd& v) {
    return combination_norm(*B.bupu, detail::to_std(v), p);
  };

  double inc0 = norm_of(F);
  double resid0 = detail::sup_residual(c0, F);

  IterationTrace tr = detail::run_trace(nmax, tol, certified_r, fixed_steps, inc0,
                                        resid0, [&]() -> std::pair<double, double> {
                                          Eigen::VectorXd corr = B.A * (c - F);
                                          F += corr;
                                          return {norm_of(corr),
                                                  detail::sup_residual(c0, F)};
                                        });
  return {detail::to_std(F), std::move(tr)};
}

// ---------------------------------------------------------------------------
// Preconditioned frame iteration:
//   f_0 = Σ c0(γ) ‖u_γ‖₁ K(·, γ),   f_n = f_{n−1} + (f_0 − S f_{n−1}).
// ---------------------------------------------------------------------------
inline ApResult frame_reconstruct(const OperatorBundle& B, const std::vector<double>& c0,
                                  int nmax, double tol, double p = INFINITY,
                                  double certified_r = std::numeric_limits<double>::quiet_NaN(),
                                  int fixed_steps = -1)
{
  if (c0.size() != B.samples())
    throw std::invalid_argument("frame_reconstruct: sample vector length mismatch");

  Eigen::VectorXd c = detail::as_vec(c0);
  Eigen::VectorXd f0 = B.KG * B.masses.cwiseProduct(c);
  Eigen::VectorXd f = f0;

  auto norm_of = [&](const Eigen::VectorXd& v) {
    return signal_norm(Signal{B.kernel, detail::to_std(v)}, p).value;
  };

  double inc0 = norm_of(f0);
  double resid0 = detail::sup_residual(c0, B.E * f);

  IterationTrace tr = detail::run_trace(
      nmax, tol, certified_r, fixed_steps, inc0, resid0,
      [&]() -> std::pair<double, double> {
        Eigen::VectorXd corr = f0 - B.KG * B.masses.cwiseProduct(B.E * f);
        f += corr;
        return {norm_of(corr), detail::sup_residual(c0, B.E * f)};
      });
  return {Signal{B.kernel, detail::to_std(f)}, std::move(tr)};
}

// ---------------------------------------------------------------------------
// Decibel stopping rules.
// ---------------------------------------------------------------------------
struct NoiseBudget {
  double snr_db = 0.0;  // sample-to-noise ratio, decibels
  double sner_db = 0.0; // sample-to-numerical-error ratio, decibels
  double r0 = 0.0;      // contraction rate used by the rules
};

namespace detail {

inline void require_rate(double r0, const char* what)
{
  if (!(r0 > 0.0) || !(r0 < 1.0))
    throw std::invalid_argument(std::string(what) + ": r0 must lie in (0, 1)");
}

} // namespace detail

// Smallest step count whose geometric error term drops below the noise floor:
// n0 = floor(SNR / (20·log10(1/r0))), clamped below at 0.
inline long stopping_step_snr(const NoiseBudget& b)
{
  detail::require_rate(b.r0, "stopping_step_snr");
  double L = std::log10(1.0 / b.r0);
  long n = static_cast<long>(std::floor(b.snr_db / (20.0 * L)));
  return std::max(0L, n);
}

// Step count balancing the geometric term against accumulated numerical error:
// n1 = floor(SNER/(20L) − log10(ln(1/r0))/L − 1), L = log10(1/r0), clamped ≥ 0.
inline long stopping_step_sner(const NoiseBudget& b)
{
  detail::require_rate(b.r0, "stopping_step_sner");
  double L = std::log10(1.0 / b.r0);
  double y = b.sner_db / (20.0 * L) - std::log10(std::log(1.0 / b.r0)) / L - 1.0;
  long n = static_cast<long>(std::floor(y));
  return std::max(0L, n);
}

// The objective the SNER rule approximately minimizes and its exact minimizer.
inline double sner_objective(const NoiseBudget& b, double y)
{
  detail::require_rate(b.r0, "sner_objective");
  return std::pow(b.r0, y) + y * std::pow(10.0, -b.sner_db / 20.0);
}

inline double sner_argmin(const NoiseBudget& b)
{
  detail::require_rate(b.r0, "sner_argmin");
  double L = std::log10(1.0 / b.r0);
  return b.sner_db / (20.0 * L) + std::log10(std::log(1.0 / b.r0)) / L;
}

// A-priori error bound after n correction steps with noisy samples:
//   r1²·(1−r0)^{−1}·(sup_γ mass_γ)^{1/p}·(‖c0‖·r0^{n+1} + ‖ε‖),
// the operator norm being replaced by its computable row-sum estimate r1.
inline double noisy_error_bound(const OperatorBundle& B, double r0, double r1,
                                double c0_norm, double eps_norm, long n, double p)
{
  detail::require_rate(r0, "noisy_error_bound");
  if (!(r1 > 0.0)) throw std::invalid_argument("noisy_error_bound: r1 must be positive");
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("noisy_error_bound: p must lie in [1, ∞]");
  if (n < 0) throw std::invalid_argument("noisy_error_bound: n must be ≥ 0");
  double sup_mass = B.masses.maxCoeff();
  double mass_pow = std::isinf(p) ? 1.0 : std::pow(sup_mass, 1.0 / p);
  return r1 * r1 / (1.0 - r0) * mass_pow *
         (c0_norm * std::pow(r0, static_cast<double>(n) + 1.0) + eps_norm);
}

} // namespace rkss

#endif // RKSS_RECONSTRUCT_HPP
