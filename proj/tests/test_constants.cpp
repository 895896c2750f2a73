#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rkss/constants.hpp"

using namespace rkss;
using Catch::Matchers::ContainsSubstring;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Kernel& k1() {
  static const Kernel k = make_linear_spline_kernel(1, {0, 10});
  return k;
}

const KernelConstants& kc1() {
  static const KernelConstants c =
      kernel_constants(k1(), {0.0, 0.025, 0.05, 0.1, 0.2, 0.3}, {1.0, 2.0, kInf});
  return c;
}

const OneSidedNorms& k1_norms_01() {
  static const OneSidedNorms n = one_sided_modulus_norms(k1(), 0.1);
  return n;
}

// Product kernel hat(x) * indicator[-0.5,0.5)(y): both one-sided norms are
// known in closed form (0.5*delta0 for the x side, 1 for the y side), so it
// pins down which side is which and how the p-interpolation combines them.
Kernel product_surrogate() {
  Kernel s;
  s.dim = 1;
  s.domain = Box::interval(-1.0, 1.0);
  s.symmetric = false;
  s.grid_resolution = 5e-3;
  s.sweep_period = 0.0;
  s.basis.push_back(make_hat(0.0, 1.0));
  s.cokernel.push_back(make_indicator(-0.5, 0.5));
  s.anchors.push_back(0.0);
  s.boundary_col.push_back(false);
  s.finalize();
  return s;
}

}  // namespace

TEST_CASE("envelope constants match independently swept values") {
  const KernelConstants& c = kc1();

  CHECK(c.dim == 1);
  CHECK(c.grid_resolution == Catch::Approx(1e-3));
  CHECK(c.truncation_radius > 25.0);
  CHECK(c.truncation_radius < 45.0);

  // Conservative sweep values: never below a plain-grid evaluation of the
  // same quantity, and at most a few percent above it.
  CHECK(c.r1 >= 2.389);
  CHECK(c.r1 <= 2.43);
  CHECK(c.r0_of(0.025) >= 0.139);
  CHECK(c.r0_of(0.025) <= 0.21);
  CHECK(c.r0_of(0.05) >= 0.278);
  CHECK(c.r0_of(0.05) <= 0.36);
  CHECK(c.r0_of(0.1) >= 0.558);
  CHECK(c.r0_of(0.1) <= 0.66);
  CHECK(c.r0_of(0.2) >= 1.090);
  CHECK(c.r0_of(0.2) <= 1.20);
  CHECK(c.r0_of(0.3) >= 1.566);
  CHECK(c.r0_of(0.3) <= 1.70);

  // Shift radius delta/2 for r0 versus delta for osc: the same envelope value
  // must be reused for matching radii.
  CHECK(c.osc_of(0.1) == c.r0_of(0.2));
  CHECK(c.osc_of(0.05) == c.r0_of(0.1));

  // r0 grows with the shift budget and vanishes with it.
  CHECK(c.r0_of(0.0) == 0.0);
  CHECK(c.osc_of(0.0) == 0.0);
  CHECK(c.r0_of(0.025) < c.r0_of(0.05));
  CHECK(c.r0_of(0.05) < c.r0_of(0.1));
  CHECK(c.r0_of(0.1) < c.r0_of(0.2));
  CHECK(c.r0_of(0.2) < c.r0_of(0.3));

  // At coarse gaps the contraction certificate is lost...
  CHECK(c.r0_of(0.3) >= 1.0);
  // ...while the two-step factor still certifies the frame iteration at the
  // fine gap used by the demos.
  const double r2 = c.r2_of(0.025);
  CHECK(r2 == (2.0 * c.r1 + c.r0_of(0.025)) * c.r0_of(0.025));
  CHECK(r2 >= 0.80);
  CHECK(r2 <= 0.95);
  CHECK(r2 < 1.0);
}

TEST_CASE("constant lookups validate their inputs") {
  const KernelConstants& c = kc1();

  CHECK_THROWS_AS(c.r0_of(0.15), std::out_of_range);      // never requested
  CHECK_THROWS_AS(c.r0_of(-0.1), std::out_of_range);
  CHECK_THROWS_AS(c.aq_of(0.1, 0.5), std::invalid_argument);  // q < 1
  CHECK_THROWS_AS(c.bq_of(0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(c.aq_of(0.1, std::nan("")), std::invalid_argument);

  CHECK_THROWS_AS(kernel_constants(k1(), {-0.1}), std::invalid_argument);
  CHECK_THROWS_AS(kernel_constants(k1(), {std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(envelope_l1(k1(), -1.0), std::invalid_argument);
  CHECK_THROWS_AS(one_sided_modulus_norms(k1(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(one_sided_modulus_norms(k1(), -0.2), std::invalid_argument);
  CHECK_THROWS_AS(r0_prime(product_surrogate(), 0.1, 0.5), std::invalid_argument);
}

TEST_CASE("sampling density factors follow the interpolation formulas") {
  const KernelConstants& c = kc1();
  const double d = 0.1;
  const double r1 = c.r1;
  const double osc = c.osc_of(d);

  // q = 1: pure L1 factors.
  CHECK(c.aq_of(d, 1.0) == Catch::Approx(r1).epsilon(1e-14));
  CHECK(c.bq_of(d, 1.0) == Catch::Approx(osc).epsilon(1e-14));
  // q = infinity: the gap-volume normalization appears in full.
  CHECK(c.aq_of(d, kInf) == Catch::Approx((r1 + osc) / d).epsilon(1e-14));
  CHECK(c.bq_of(d, kInf) == Catch::Approx(7.0 * osc / d).epsilon(1e-14));
  // q = 2: geometric halfway point.
  CHECK(c.aq_of(d, 2.0) ==
        Catch::Approx(std::sqrt(r1 * (r1 + osc) / d)).epsilon(1e-12));
  CHECK(c.bq_of(d, 2.0) ==
        Catch::Approx(std::sqrt(7.0 * osc * osc / d)).epsilon(1e-12));
}

TEST_CASE("size factors dominate exact row norms") {
  const KernelConstants& c = kc1();
  const Kernel& k = k1();
  const double d = 0.1;
  const double slack = 1.0 + 1e-6;

  for (double x : {0.0, 1.0 / 3.0, 3.7}) {
    const PiecewisePoly row = k.row(x);

    // Row norms of the kernel itself against the a-factors.
    const double l1 = row.integrate_abs(row.lo(), row.hi());
    const double l2 = std::sqrt(integrate_product(row, row));
    const double li = row.sup_abs_all();
    CHECK(l1 <= c.aq_of(d, 1.0) * slack);
    CHECK(l2 <= c.aq_of(d, 2.0) * slack);
    CHECK(li <= c.aq_of(d, kInf) * slack);

    // Row norms of the shift modulus against the b-factors; midpoint sums are
    // accurate to far better than the headroom built into the b-factors.
    const double res = 5e-3;
    const double reach = c.truncation_radius + 1.0;
    const long n = std::lround(2.0 * reach / res);
    double s1 = 0.0, s2 = 0.0, si = 0.0;
    for (long j = 0; j < n; ++j) {
      const double y = x - reach + (j + 0.5) * res;
      if (!k.in_domain(x) || !k.in_domain(y)) continue;
      const double m = modulus(k, d, x, y);
      s1 += m * res;
      s2 += m * m * res;
      si = std::max(si, m);
    }
    CHECK(s1 <= c.bq_of(d, 1.0) * slack);
    CHECK(std::sqrt(s2) <= c.bq_of(d, 2.0) * slack);
    CHECK(si <= c.bq_of(d, kInf) * slack);
  }
}

TEST_CASE("one-sided shift norms reproduce closed-form anchors") {
  // Symmetric kernel: both sides agree to rounding.
  const OneSidedNorms& n1 = k1_norms_01();
  CHECK(n1.x_side == Catch::Approx(n1.y_side).margin(1e-12));
  CHECK(n1.x_side == Catch::Approx(0.261200).margin(2e-3));

  // The one-sided norm grows exactly linearly in the shift budget here.
  const OneSidedNorms n2 = one_sided_modulus_norms(k1(), 0.2);
  const OneSidedNorms n4 = one_sided_modulus_norms(k1(), 0.4);
  CHECK(n2.x_side == Catch::Approx(0.522401).margin(3e-3));
  CHECK(n4.x_side == Catch::Approx(1.044802).margin(5e-3));

  // Sandwich between the sharp linear lower bound and the guaranteed upper
  // envelope, with two percent headroom on either side.
  const double lower_slope = (9.0 - std::sqrt(3.0)) / 4.0;
  const double x1[3] = {n1.x_side, n2.x_side, n4.x_side};
  const double d0s[3] = {0.1, 0.2, 0.4};
  for (int i = 0; i < 3; ++i) {
    CHECK(x1[i] >= lower_slope * d0s[i] * 0.98);
    CHECK(x1[i] <= 4.5 * d0s[i] * 1.02);
  }

  // Finer generators tighten the upper envelope; stay under it at both gaps.
  for (int nn : {2, 4}) {
    const Kernel kn = make_linear_spline_kernel(nn, {0, 10});
    const double cap_slope = 9.0 * nn / (6.0 * nn - 4.0);
    for (double d0 : {0.1, 0.4}) {
      const OneSidedNorms nm = one_sided_modulus_norms(kn, d0);
      CHECK(nm.x_side <= cap_slope * d0 * 1.02);
      const double expect = (nn == 2 ? 2.174229 : 1.772670) * d0;
      CHECK(nm.x_side == Catch::Approx(expect).margin(8e-3));
    }
  }
}

TEST_CASE("shift norm certificate exceeds one at the critical gap") {
  const double v = r0_prime(k1(), 0.55, kInf);
  CHECK(v >= 1.0);
  CHECK(v == Catch::Approx(1.43661).margin(8e-3));
}

TEST_CASE("p-interpolation of the one-sided norms") {
  // hat(x) * indicator(y): shifting x moves mass by at most delta0/2 times
  // the unit slope, while shifting y can flip the indicator edge entirely.
  const Kernel s = product_surrogate();
  const OneSidedNorms n = one_sided_modulus_norms(s, 0.1);
  CHECK(n.x_side == Catch::Approx(0.05).margin(2e-3));
  CHECK(n.y_side == Catch::Approx(1.0).margin(2e-2));

  CHECK(r0_prime(s, 0.1, kInf) == Catch::Approx(n.x_side).margin(1e-12));
  CHECK(r0_prime(s, 0.1, 1.0) == Catch::Approx(n.y_side).margin(1e-12));
  CHECK(r0_prime(s, 0.1, 2.0) ==
        Catch::Approx(std::sqrt(n.x_side * n.y_side)).margin(1e-12));
}

TEST_CASE("envelope sweep rejects kernels without off-diagonal decay") {
  // Constant-in-y columns over a wide domain: the decay profile is still at
  // full height inside the outermost band of the truncated sweep, which must
  // refuse to silently drop that mass.
  Kernel flat;
  flat.dim = 1;
  flat.domain = Box::interval(-25.0, 25.0);
  flat.symmetric = false;
  flat.grid_resolution = 0.05;
  flat.sweep_period = 0.0;
  for (int i = -24; i <= 24; ++i) {
    flat.basis.push_back(make_hat(static_cast<double>(i), 1.0));
    flat.cokernel.push_back(make_indicator(-25.0, 25.0));
    flat.anchors.push_back(static_cast<double>(i));
    flat.boundary_col.push_back(false);
  }
  flat.finalize();
  CHECK_THROWS_WITH(envelope_l1(flat, 0.0), ContainsSubstring("decay"));
}
