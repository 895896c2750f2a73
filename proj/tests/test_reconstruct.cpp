#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rkss/bupu.hpp"
#include "rkss/constants.hpp"
#include "rkss/geometry.hpp"
#include "rkss/kernel.hpp"
#include "rkss/operators.hpp"
#include "rkss/reconstruct.hpp"
#include "rkss/signal.hpp"

using namespace rkss;

namespace {

const double kInf = std::numeric_limits<double>::infinity();
const double kNaN = std::numeric_limits<double>::quiet_NaN();

const Kernel& k1()
{
  static Kernel K = make_linear_spline_kernel(1, {0, 10});
  return K;
}

// One envelope sweep shared by every rate check in this suite.
const KernelConstants& kc1()
{
  static KernelConstants kc = kernel_constants(k1(), {0.025, 0.1}, {});
  return kc;
}

struct Config {
  SamplingSet set;
  Bupu bupu;
  OperatorBundle bundle;
  Config(double base, std::uint64_t seed, double jitter = 0.0)
      : set(generate_jittered(base, jitter, Box::interval(0.0, 10.0), seed)),
        bupu(normalized_indicator_bupu(
            set, covering_delta(set, jitter > 0.0 ? maximal_gap(set) : base))),
        bundle(build_bundle(k1(), set, bupu))
  {
  }
};

const Config& fine() // lattice, gap 0.1
{
  static Config c(0.1, 7);
  return c;
}

const Config& dense() // lattice, gap 0.02 — frame-certified territory
{
  static Config c(0.02, 7);
  return c;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b)
{
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed)
{
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = uniform01(seed, 0, i) * 2.0 - 1.0;
  return v;
}

} // namespace

TEST_CASE("correction iteration recovers signals from exact samples")
{
  const OperatorBundle& B = fine().bundle;
  const double r0 = kc1().r0_of(0.1);
  const double tol = 1e-9;

  for (std::uint64_t s = 0; s < 20; ++s) {
    Signal g = random_signal(k1(), 1000 + s, 0);
    std::vector<double> c0 = bundle_samples(B, g);
    ApResult r = ap_reconstruct(B, c0, 60, tol, kInf, r0);

    CHECK(r.trace.stop_reason == StopReason::tolerance);
    CHECK_FALSE(r.trace.measured_only);
    CHECK(r.trace.steps.size() <= 61);

    double scale = signal_norm(g, kInf).value;
    REQUIRE(scale > 0.0);
    Signal diff = r.signal;
    for (std::size_t i = 0; i < diff.coeffs.size(); ++i) diff.coeffs[i] -= g.coeffs[i];
    CHECK(signal_norm(diff, kInf).value <= tol * std::max(1.0, scale));
    CHECK(signal_norm(diff, kInf).value / scale <= 1e-8);

    // every recorded correction shrinks at the certified rate
    for (std::size_t i = 1; i < r.trace.steps.size(); ++i) {
      CHECK(r.trace.steps[i].increment >= 0.0);
      CHECK(r.trace.steps[i].ratio <= r0 * 1.05);
    }
    CHECK(std::isnan(r.trace.steps[0].ratio));

    // the limit signal interpolates its own samples: one more correction is nil
    Signal extra = apply_P(B, [&] {
      std::vector<double> d = bundle_samples(B, r.signal);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = c0[i] - d[i];
      return d;
    }());
    CHECK(lp_norm(extra.coeffs, kInf) <= 10.0 * tol);
  }
}

TEST_CASE("correction iteration handles jittered sets and degenerate inputs")
{
  // irregular points with measured maximal gap near 0.3
  Config jit(0.24, 11, 0.125);
  double gap = maximal_gap(jit.set);
  CHECK(gap <= 0.31);

  Signal g = random_signal(k1(), 2024, 3);
  std::vector<double> c0 = bundle_samples(jit.bundle, g);
  ApResult r = ap_reconstruct(jit.bundle, c0, 60, 1e-9, kInf, kNaN);
  CHECK(r.trace.measured_only); // no certificate supplied
  double scale = signal_norm(g, kInf).value;
  Signal diff = r.signal;
  for (std::size_t i = 0; i < diff.coeffs.size(); ++i) diff.coeffs[i] -= g.coeffs[i];
  CHECK(signal_norm(diff, kInf).value / scale <= 1e-8);
  for (std::size_t i = 1; i < r.trace.steps.size(); ++i)
    CHECK(r.trace.steps[i].ratio < 1.0);

  // zero samples: the zero signal is the fixed point, reported at step 0
  std::vector<double> zeros(fine().bundle.samples(), 0.0);
  ApResult z = ap_reconstruct(fine().bundle, zeros, 60, 1e-9);
  CHECK(z.trace.steps.size() == 1);
  CHECK(z.trace.stop_reason == StopReason::tolerance);
  for (double c : z.signal.coeffs) CHECK(c == 0.0);

  ApResult zf = frame_reconstruct(fine().bundle, zeros, 60, 1e-9);
  CHECK(zf.trace.steps.size() == 1);
  for (double c : zf.signal.coeffs) CHECK(c == 0.0);

  DiscreteResult zd = ap_discrete(fine().bundle, zeros, 60, 1e-9);
  CHECK(zd.trace.steps.size() == 1);
  for (double v : zd.values) CHECK(v == 0.0);
}

TEST_CASE("both partitions of unity support both algorithms")
{
  const SamplingSet& G = fine().set;
  Bupu V = voronoi_bupu(G);
  OperatorBundle BV = build_bundle(k1(), G, V);

  for (std::uint64_t s : {5ull, 6ull, 7ull}) {
    Signal g = random_signal(k1(), s, 9);
    std::vector<double> c0 = bundle_samples(BV, g);
    double scale = signal_norm(g, kInf).value;

    ApResult a = ap_reconstruct(BV, c0, 60, 1e-9, kInf, kc1().r0_of(0.1));
    Signal da = a.signal;
    for (std::size_t i = 0; i < da.coeffs.size(); ++i) da.coeffs[i] -= g.coeffs[i];
    CHECK(signal_norm(da, kInf).value / scale <= 1e-8);

    ApResult f = frame_reconstruct(BV, c0, 200, 1e-9);
    Signal df = f.signal;
    for (std::size_t i = 0; i < df.coeffs.size(); ++i) df.coeffs[i] -= g.coeffs[i];
    CHECK(signal_norm(df, kInf).value / scale <= 1e-8);
  }
}

TEST_CASE("divergent iterations are refused with their trace")
{
  // frame iteration on a unit-gap lattice: the frame operator overshoots badly
  Config coarse(1.0, 7);
  Signal g = random_signal(k1(), 5, 9);
  std::vector<double> c0 = bundle_samples(coarse.bundle, g);

  bool threw = false;
  try {
    frame_reconstruct(coarse.bundle, c0, 40, 1e-8);
  } catch (const divergence_error& e) {
    threw = true;
    CHECK(e.trace.stop_reason == StopReason::diverged);
    REQUIRE(e.trace.steps.size() >= 4);
    std::size_t n = e.trace.steps.size();
    for (std::size_t i = n - 3; i < n; ++i) CHECK(e.trace.steps[i].ratio > 1.0);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("diverged"));
  }
  CHECK(threw);
}

TEST_CASE("discrete and continuous corrections agree at the samples")
{
  const OperatorBundle& B = fine().bundle;
  const double r0 = kc1().r0_of(0.1);

  for (std::uint64_t s = 0; s < 10; ++s) {
    std::vector<double> c0 = random_values(B.samples(), 500 + s);

    // step zero is exactly the iteration matrix applied to the samples
    DiscreteResult d0 = ap_discrete(B, c0, 60, 1e-9, kInf, r0, 0);
    Eigen::VectorXd want = B.A * Eigen::Map<const Eigen::VectorXd>(
                                     c0.data(), static_cast<Eigen::Index>(c0.size()));
    for (std::size_t i = 0; i < c0.size(); ++i)
      CHECK_THAT(d0.values[i] - want(static_cast<Eigen::Index>(i)),
                 Catch::Matchers::WithinAbs(0.0, 1e-14));
    CHECK(d0.trace.stop_reason == StopReason::stopping_rule);
    CHECK(d0.trace.steps.size() == 1);

    // every prefix of the two iterations lands on the same sample values
    for (int n : {1, 3, 5}) {
      DiscreteResult dn = ap_discrete(B, c0, 60, 1e-9, kInf, r0, n);
      ApResult cn = ap_reconstruct(B, c0, 60, 1e-9, kInf, r0, n);
      CHECK(dn.trace.steps.size() == static_cast<std::size_t>(n) + 1);
      CHECK(sup_diff(dn.values, bundle_samples(B, cn.signal)) <= 1e-10);
    }

    // partition-norm increments decay at the certified rate past the transient
    DiscreteResult full = ap_discrete(B, c0, 60, 1e-9, kInf, r0);
    for (std::size_t i = 2; i < full.trace.steps.size(); ++i)
      CHECK(full.trace.steps[i].ratio <= r0 * 1.05);
  }
}

TEST_CASE("frame iteration converges on a certified dense lattice")
{
  const OperatorBundle& B = dense().bundle;
  const double r2 = kc1().r2_of(0.025);
  REQUIRE(r2 < 1.0);
  const double tol = 1e-9;

  Signal g = random_signal(k1(), 31, 8);
  std::vector<double> c0 = bundle_samples(B, g);
  ApResult r = frame_reconstruct(B, c0, 200, tol, kInf, r2);
  CHECK_FALSE(r.trace.measured_only);
  CHECK(r.trace.stop_reason == StopReason::tolerance);

  double scale = signal_norm(g, kInf).value;
  Signal diff = r.signal;
  for (std::size_t i = 0; i < diff.coeffs.size(); ++i) diff.coeffs[i] -= g.coeffs[i];
  CHECK(signal_norm(diff, kInf).value / scale <= 1e-8);

  for (std::size_t i = 1; i < r.trace.steps.size(); ++i)
    CHECK(r.trace.steps[i].ratio <= r2 * 1.05);

  // the recursion limit is the geometric-series pseudo-inverse of the frame map
  Signal f0 = apply_S(B, c0);
  Signal viaSeries = neumann_apply(
      [&](const Signal& h) { return apply_S(B, bundle_samples(B, h)); }, f0, 200, tol,
      r2, nullptr);
  double agree = 0.0;
  for (std::size_t i = 0; i < viaSeries.coeffs.size(); ++i)
    agree = std::max(agree, std::abs(viaSeries.coeffs[i] - r.signal.coeffs[i]));
  CHECK(agree <= 1e-7);
}

TEST_CASE("stopping rules translate decibel budgets into step counts")
{
  CHECK(stopping_step_snr({40.0, 0.0, 0.5}) == 6);
  CHECK(stopping_step_snr({0.0, 0.0, 0.5}) == 0);
  CHECK(stopping_step_snr({0.0, 0.0, 0.9}) == 0);
  CHECK(stopping_step_snr({20.0, 0.0, 0.1}) == 1);
  CHECK(stopping_step_snr({-10.0, 0.0, 0.5}) == 0); // clamped

  CHECK(stopping_step_sner({0.0, 60.0, 0.5}) == 9);
  CHECK(stopping_step_sner({0.0, 0.0, 0.5}) == 0); // clamped
  CHECK(stopping_step_sner({0.0, 20.0, 0.1}) == 0);

  for (double bad : {0.0, 1.0, -0.3, 1.7}) {
    CHECK_THROWS_AS(stopping_step_snr({40.0, 0.0, bad}), std::invalid_argument);
    CHECK_THROWS_AS(stopping_step_sner({0.0, 60.0, bad}), std::invalid_argument);
    CHECK_THROWS_AS(sner_argmin({0.0, 60.0, bad}), std::invalid_argument);
  }
  CHECK_THROWS_AS(stopping_step_snr({40.0, 0.0, kNaN}), std::invalid_argument);

  // the rule sits next to the true minimizer of the error-budget objective
  NoiseBudget b{0.0, 60.0, 0.5};
  double y0 = sner_argmin(b);
  CHECK_THAT(y0, Catch::Matchers::WithinAbs(9.4372, 5e-4));
  double f0 = sner_objective(b, y0);
  CHECK(f0 <= sner_objective(b, y0 - 1.0));
  CHECK(f0 <= sner_objective(b, y0 + 1.0));
  CHECK(f0 <= sner_objective(b, static_cast<double>(stopping_step_sner(b))));
  CHECK(sner_objective(b, 0.0) == 1.0);
}

TEST_CASE("noise-aware error budget decays geometrically then flattens")
{
  const OperatorBundle& B = fine().bundle;
  const double r0 = 0.5, r1 = 2.4;
  const double c0n = 3.0, epsn = c0n * std::pow(10.0, -40.0 / 20.0); // 40 dB

  // monotone nonincreasing in the step count
  double prev = std::numeric_limits<double>::infinity();
  for (long n = 0; n <= 12; ++n) {
    double v = noisy_error_bound(B, r0, r1, c0n, epsn, n, kInf);
    CHECK(v <= prev);
    CHECK(v > 0.0);
    prev = v;
  }

  // noiseless budgets vanish with the iteration count
  CHECK(noisy_error_bound(B, r0, r1, c0n, 0.0, 200, kInf) < 1e-12);

  // at the decibel stopping step the geometric term has fallen below the noise
  long n0 = stopping_step_snr({40.0, 0.0, r0});
  double atn0 = noisy_error_bound(B, r0, r1, c0n, epsn, n0, kInf);
  double floor2 = 2.0 * r1 * r1 / (1.0 - r0) * epsn;
  CHECK(atn0 <= floor2 * (1.0 + 1e-12));

  // the mass factor enters at the advertised power
  double supm = B.masses.maxCoeff();
  double v1 = noisy_error_bound(B, r0, r1, c0n, epsn, 3, 1.0);
  double vInf = noisy_error_bound(B, r0, r1, c0n, epsn, 3, kInf);
  CHECK_THAT(v1 - supm * vInf, Catch::Matchers::WithinAbs(0.0, 1e-12 * std::abs(v1)));

  CHECK_THROWS_AS(noisy_error_bound(B, 1.2, r1, c0n, epsn, 3, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(noisy_error_bound(B, r0, -1.0, c0n, epsn, 3, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(noisy_error_bound(B, r0, r1, c0n, epsn, -1, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(noisy_error_bound(B, r0, r1, c0n, epsn, 3, 0.5),
                  std::invalid_argument);
}

TEST_CASE("telescoping expansion matches the recursion")
{
  const Kernel& K = k1();
  const OperatorBundle& B = fine().bundle;
  Signal g = random_signal(K, 77, 1);
  std::vector<double> c0 = bundle_samples(B, g);

  Signal f0 = apply_P(B, c0);
  Signal rhs = apply_T(K, f0);
  Signal term = f0;
  for (int n = 1; n <= 5; ++n) {
    // term ← (T − P) term, applied through the real operators
    Signal t = apply_T(K, term);
    Signal p = apply_P(B, bundle_samples(B, term));
    for (std::size_t i = 0; i < t.coeffs.size(); ++i) t.coeffs[i] -= p.coeffs[i];
    term = t;
    for (std::size_t i = 0; i < rhs.coeffs.size(); ++i)
      rhs.coeffs[i] += term.coeffs[i];

    ApResult it = ap_reconstruct(B, c0, 60, 1e-9, kInf, kc1().r0_of(0.1), n);
    double d = 0.0;
    for (std::size_t i = 0; i < rhs.coeffs.size(); ++i)
      d = std::max(d, std::abs(rhs.coeffs[i] - it.signal.coeffs[i]));
    CHECK(d <= 1e-10);
  }
}

TEST_CASE("reconstruction inputs are validated")
{
  const OperatorBundle& B = fine().bundle;
  std::vector<double> short_c0(3, 0.0);
  std::vector<double> c0 = random_values(B.samples(), 9);

  CHECK_THROWS_AS(ap_reconstruct(B, short_c0, 10, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(ap_discrete(B, short_c0, 10, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(frame_reconstruct(B, short_c0, 10, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(ap_reconstruct(B, c0, -1, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(ap_reconstruct(B, c0, 10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ap_reconstruct(B, c0, 10, -1e-8), std::invalid_argument);
  // the continuous algorithms require a norm their signals support exactly
  CHECK_THROWS_AS(ap_reconstruct(B, c0, 10, 1e-8, 3.0), std::invalid_argument);
}
