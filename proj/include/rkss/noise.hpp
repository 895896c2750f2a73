#ifndef RKSS_NOISE_HPP
#define RKSS_NOISE_HPP

// Stability verification of the sampling inequalities and Monte-Carlo
// verification of the pointwise error statistics under bounded noise.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkss/bupu.hpp"
#include "rkss/geometry.hpp"
#include "rkss/operators.hpp"
#include "rkss/reconstruct.hpp"
#include "rkss/signal.hpp"

namespace rkss {

// ---------------------------------------------------------------------------
// Bounded zero-mean noise models.  Draws are counter-based and deterministic:
// the same (seed, stream, counter) triple always yields the same value.
// ---------------------------------------------------------------------------
struct NoiseModel {
  enum class Kind { uniform_bounded, truncated_gaussian };
  Kind kind = Kind::uniform_bounded;
  double bound = 0.0;  // support is contained in [−bound, bound]
  double sigma2 = 0.0; // exact variance of one draw

  double draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) const
  {
    if (bound == 0.0) return 0.0;
    if (kind == Kind::uniform_bounded)
      return (2.0 * uniform01(seed, stream, counter) - 1.0) * bound;
    // truncated gaussian: invert the normal CDF restricted to ±4σ
    double sigma = bound / 4.0;
    double phi4 = 0.5 * std::erfc(-4.0 / std::sqrt(2.0));
    double phim4 = 0.5 * std::erfc(4.0 / std::sqrt(2.0));
    double u = uniform01_open(seed, stream, counter);
    double p = phim4 + u * (phi4 - phim4);
    return normal_quantile(p) * sigma;
  }
};

// Uniform noise on [−B, B]: variance B²/3.
inline NoiseModel noise_uniform(double B)
{
  if (!(B >= 0.0)) throw std::invalid_argument("noise_uniform: bound must be ≥ 0");
  return {NoiseModel::Kind::uniform_bounded, B, B * B / 3.0};
}

// Gaussian with scale sigma truncated to ±4σ; the truncation shaves the
// variance to σ²·(1 − 8φ(4)/(2Φ(4)−1)) ≈ 0.998929·σ².
inline NoiseModel noise_truncated_gaussian(double sigma)
{
  if (!(sigma >= 0.0))
    throw std::invalid_argument("noise_truncated_gaussian: sigma must be ≥ 0");
  double pdf4 = std::exp(-8.0) / 2.5066282746310002; // φ(4), with √(2π) inlined
  double mass = std::erf(4.0 / std::sqrt(2.0)); // 2Φ(4) − 1
  double s2 = sigma * sigma * (1.0 - 8.0 * pdf4 / mass);
  return {NoiseModel::Kind::truncated_gaussian, 4.0 * sigma, s2};
}

// ---------------------------------------------------------------------------
// Sampling stability: the two-sided norm comparison between a signal and its
// samples, with the gap-cube occupation counts supplying the scale factors.
// ---------------------------------------------------------------------------
struct StabilityReport {
  double delta0 = 0.0;       // measured maximal gap of the sampling set
  std::int64_t min_count = 0; // fewest points in any delta0-cube
  std::int64_t max_count = 0; // most points in any delta0-cube
  double r_certified = std::numeric_limits<double>::quiet_NaN();
  double p = 0.0;
  std::size_t signals = 0;
  std::size_t violations = 0;
  double worst_lower_slack = std::numeric_limits<double>::infinity();
  double worst_upper_slack = std::numeric_limits<double>::infinity();

  bool all_pass() const { return violations == 0; }
};

inline StabilityReport stability_check(const Kernel& K, const SamplingSet& G,
                                       const Bupu& U, double p,
                                       const std::vector<Signal>& signals,
                                       double r_certified)
{
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("stability_check: p must lie in [1, ∞]");
  if (G.size() != U.size())
    throw std::invalid_argument("stability_check: partition does not match the set");
  if (!(r_certified < 1.0) || !(r_certified > 0.0))
    throw certificate_error("stability_check: no stability certificate below one (r = " +
                                std::to_string(r_certified) + ")",
                            r_certified);

  StabilityReport rep;
  rep.p = p;
  rep.r_certified = r_certified;
  rep.delta0 = maximal_gap(G);
  double d0 = rep.delta0;
  if (gap_counts(G, d0).min_count < 1) d0 *= 1.0 + 1e-9; // bisection ulp guard
  GapCounts counts = gap_counts(G, d0);
  rep.min_count = counts.min_count;
  rep.max_count = counts.max_count;

  const int d = K.dim;
  double lo_factor = 1.0, hi_factor = 1.0;
  if (!std::isinf(p)) {
    double cell = std::pow(rep.delta0, static_cast<double>(d));
    lo_factor = std::pow(static_cast<double>(counts.min_count) / cell, 1.0 / p);
    hi_factor = std::pow(static_cast<double>(counts.max_count) / cell, 1.0 / p);
  }

  for (const Signal& f : signals) {
    ++rep.signals;
    double nf = signal_norm(f, p).value;
    double sv = lp_norm(sample_signal(f, G).values, p);
    if (nf == 0.0) {
      if (sv != 0.0) ++rep.violations;
      continue;
    }
    double lhs = (1.0 - r_certified) * lo_factor * nf;
    double rhs = (1.0 + r_certified) * hi_factor * nf;
    bool ok = sv >= lhs * (1.0 - 1e-12) && sv <= rhs * (1.0 + 1e-12);
    if (!ok) ++rep.violations;
    if (lhs > 0.0)
      rep.worst_lower_slack = std::min(rep.worst_lower_slack, sv / lhs - 1.0);
    if (sv > 0.0)
      rep.worst_upper_slack = std::min(rep.worst_upper_slack, rhs / sv - 1.0);
  }
  return rep;
}

namespace detail {

inline PiecewisePoly pp_derivative(const PiecewisePoly& f)
{
  PiecewisePoly d;
  if (f.empty()) return d;
  d.breaks = f.breaks;
  d.coef.resize(f.coef.size());
  for (std::size_t i = 0; i < f.coef.size(); ++i) {
    const auto& c = f.coef[i];
    std::vector<double> dc;
    for (std::size_t j = 1; j < c.size(); ++j)
      dc.push_back(static_cast<double>(j) * c[j]);
    if (dc.empty()) dc.push_back(0.0);
    d.coef[i] = std::move(dc);
  }
  return d;
}

} // namespace detail

// ‖f′‖_p / ‖f‖_p for a signal, with the derivative taken piecewise.
inline double derivative_ratio(const Signal& f, double p)
{
  PiecewisePoly fp = signal_to_piecewise(f);
  double nf = pp_norm(fp, p).value;
  if (nf == 0.0) return 0.0;
  return pp_norm(detail::pp_derivative(fp), p).value / nf;
}

// ---------------------------------------------------------------------------
// Derivative-based stability: signals with ‖f′‖_p ≤ B0‖f‖_p sampled at gaps
// δ0 < 1/B0 satisfy a mass-weighted two-sided bound with constant 1 ± δ0·B0.
// When either precondition fails the report carries the measurement and makes
// no claim.
// ---------------------------------------------------------------------------
struct DerivativeStabilityReport {
  double b0 = 0.0;
  double p = 0.0;
  double delta0 = 0.0;
  double measured_ratio = 0.0; // ‖f′‖_p / ‖f‖_p
  double rf = 0.0;             // δ0 · B0
  bool ratio_ok = false;       // measured_ratio ≤ B0
  bool gap_ok = false;         // δ0 < 1/B0
  bool claim = false;          // both preconditions hold
  double lower = 0.0;          // (1 − rf)·‖f‖_p
  double middle = 0.0;         // ‖(f(γ)·m_γ^{1/p})‖_ℓp
  double upper = 0.0;          // (1 + rf)·‖f‖_p
  bool holds = false;          // lower ≤ middle ≤ upper (when claimed)
};

inline DerivativeStabilityReport derivative_stability_check(const Signal& f, double B0,
                                                            const SamplingSet& G,
                                                            const Bupu& U, double p)
{
  if (!(B0 > 0.0))
    throw std::invalid_argument("derivative_stability_check: B0 must be positive");
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("derivative_stability_check: p must lie in [1, ∞]");
  if (G.size() != U.size())
    throw std::invalid_argument(
        "derivative_stability_check: partition does not match the set");

  DerivativeStabilityReport rep;
  rep.b0 = B0;
  rep.p = p;
  rep.delta0 = maximal_gap(G);
  rep.measured_ratio = derivative_ratio(f, p);
  rep.rf = rep.delta0 * B0;
  rep.ratio_ok = rep.measured_ratio <= B0 * (1.0 + 1e-9);
  rep.gap_ok = rep.delta0 < 1.0 / B0;
  rep.claim = rep.ratio_ok && rep.gap_ok;

  double nf = signal_norm(f, p).value;
  SampleVector sv = sample_signal(f, G);
  double mid;
  if (std::isinf(p)) {
    mid = lp_norm(sv.values, p);
  } else {
    double acc = 0.0;
    for (std::size_t g = 0; g < G.size(); ++g)
      acc += std::pow(std::abs(sv.values[g]), p) * U.masses[g];
    mid = std::pow(acc, 1.0 / p);
  }
  rep.lower = (1.0 - rep.rf) * nf;
  rep.middle = mid;
  rep.upper = (1.0 + rep.rf) * nf;
  rep.holds = rep.claim && mid >= rep.lower * (1.0 - 1e-12) &&
              mid <= rep.upper * (1.0 + 1e-12);
  return rep;
}

// ---------------------------------------------------------------------------
// Monte-Carlo error statistics.
// ---------------------------------------------------------------------------
enum class Displayer { neumann_ap, neumann_frame, plain_T, plain_K };

inline const char* to_string(Displayer d)
{
  switch (d) {
    case Displayer::neumann_ap: return "neumann_ap";
    case Displayer::neumann_frame: return "neumann_frame";
    case Displayer::plain_T: return "plain_T";
    case Displayer::plain_K: return "plain_K";
  }
  return "unknown";
}

struct PointStats {
  double x = 0.0;
  double mean_error = 0.0;
  double emp_var = 0.0;
  double pred_var = 0.0; // σ² Σ_γ |R(e_γ)(x)|²
  double se_mean = 0.0;
  double se_var = 0.0;
};

struct ErrorReport {
  std::vector<PointStats> points;
  std::size_t trials = 0;
  double alpha_delta = 0.0; // mass scale of the partition (sup of the masses)
  double sigma2 = 0.0;
  bool low_trials = false; // fewer than 30 trials: confidence bands unreliable
  std::string displayer;
};

namespace detail {

// Displayer map in coefficient space with a fixed number of corrections; the
// fixed count keeps the map linear in the sample vector.
inline Eigen::VectorXd displayer_coeffs(const OperatorBundle& B,
                                        const Eigen::VectorXd& c, Displayer d,
                                        int steps)
{
  switch (d) {
    case Displayer::plain_T: return B.TU * c;
    case Displayer::plain_K: return B.KG * B.masses.cwiseProduct(c);
    case Displayer::neumann_ap: {
      Eigen::VectorXd f0 = B.TU * c;
      Eigen::VectorXd f = f0;
      for (int n = 0; n < steps; ++n) f += f0 - B.TU * (B.E * f);
      return f;
    }
    case Displayer::neumann_frame: {
      Eigen::VectorXd f0 = B.KG * B.masses.cwiseProduct(c);
      Eigen::VectorXd f = f0;
      for (int n = 0; n < steps; ++n) f += f0 - B.KG * B.masses.cwiseProduct(B.E * f);
      return f;
    }
  }
  throw std::invalid_argument("displayer_coeffs: unknown displayer");
}

} // namespace detail

inline ErrorReport monte_carlo_error(const OperatorBundle& B, const Signal& g,
                                     const NoiseModel& noise, std::size_t M,
                                     const std::vector<double>& eval_points,
                                     Displayer displayer, std::uint64_t seed,
                                     int steps = 60,
                                     double certified_r =
                                         std::numeric_limits<double>::quiet_NaN())
{
  if (M < 2) throw std::invalid_argument("monte_carlo_error: at least two trials");
  if (eval_points.empty())
    throw std::invalid_argument("monte_carlo_error: no evaluation points");
  if (g.kernel != B.kernel)
    throw std::invalid_argument("monte_carlo_error: signal kernel differs from bundle");
  if (steps < 0) throw std::invalid_argument("monte_carlo_error: steps must be ≥ 0");
  const bool neumann =
      displayer == Displayer::neumann_ap || displayer == Displayer::neumann_frame;
  if (neumann && !(certified_r < 1.0))
    throw certificate_error(
        "monte_carlo_error: series displayers need a contraction certificate below "
        "one (r = " +
            std::to_string(certified_r) + ")",
        certified_r);

  const std::size_t ng = B.samples();
  const std::size_t np = eval_points.size();

  // displayer columns evaluated at the requested points
  std::vector<std::vector<double>> col(np, std::vector<double>(ng, 0.0));
  {
    std::vector<std::vector<double>> colv(ng);
    parallel_for(ng, [&](std::size_t gidx) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ng));
      e(static_cast<Eigen::Index>(gidx)) = 1.0;
      Signal rg{B.kernel, detail::to_std(detail::displayer_coeffs(B, e, displayer,
                                                                  steps))};
      std::vector<double> vals(np);
      for (std::size_t j = 0; j < np; ++j) vals[j] = eval_signal(rg, eval_points[j]);
      colv[gidx] = std::move(vals);
    });
    for (std::size_t gidx = 0; gidx < ng; ++gidx)
      for (std::size_t j = 0; j < np; ++j) col[j][gidx] = colv[gidx][j];
  }

  // clean-sample reconstruction bias at each point
  std::vector<double> c_clean = bundle_samples(B, g);
  Signal base{B.kernel,
              detail::to_std(detail::displayer_coeffs(
                  B, detail::as_vec(c_clean), displayer, steps))};
  std::vector<double> bias(np);
  for (std::size_t j = 0; j < np; ++j)
    bias[j] = eval_signal(g, eval_points[j]) - eval_signal(base, eval_points[j]);

  // per-trial errors through the linearity of the displayer map
  std::vector<std::vector<double>> err(np, std::vector<double>(M, 0.0));
  parallel_for(M, [&](std::size_t t) {
    std::vector<double> eps(ng);
    for (std::size_t gidx = 0; gidx < ng; ++gidx)
      eps[gidx] = noise.draw(seed, gidx, t);
    for (std::size_t j = 0; j < np; ++j) {
      double s = 0.0;
      for (std::size_t gidx = 0; gidx < ng; ++gidx) s += eps[gidx] * col[j][gidx];
      err[j][t] = bias[j] - s;
    }
  });

  ErrorReport rep;
  rep.trials = M;
  rep.sigma2 = noise.sigma2;
  rep.alpha_delta = B.masses.maxCoeff();
  rep.low_trials = M < 30;
  rep.displayer = to_string(displayer);
  rep.points.resize(np);
  for (std::size_t j = 0; j < np; ++j) {
    PointStats& ps = rep.points[j];
    ps.x = eval_points[j];
    double sum = 0.0;
    for (std::size_t t = 0; t < M; ++t) sum += err[j][t];
    ps.mean_error = sum / static_cast<double>(M);
    double ss = 0.0;
    for (std::size_t t = 0; t < M; ++t) {
      double d = err[j][t] - ps.mean_error;
      ss += d * d;
    }
    ps.emp_var = ss / static_cast<double>(M - 1);
    double pv = 0.0;
    for (std::size_t gidx = 0; gidx < ng; ++gidx) pv += col[j][gidx] * col[j][gidx];
    ps.pred_var = noise.sigma2 * pv;
    ps.se_mean = std::sqrt(ps.emp_var / static_cast<double>(M));
    ps.se_var = ps.emp_var * std::sqrt(2.0 / static_cast<double>(M - 1));
  }
  return rep;
}

// ∫ |K(x, z)|² dz over the kernel row at x.
inline double energy_integral(const Kernel& K, double x)
{
  if (!K.in_domain(x))
    throw std::domain_error("energy_integral: point outside the evaluation window");
  PiecewisePoly row = K.row(x);
  return integrate_product(row, row);
}

} // namespace rkss

#endif // RKSS_NOISE_HPP
