#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rkss/bupu.hpp"
#include "rkss/constants.hpp"
#include "rkss/geometry.hpp"
#include "rkss/kernel.hpp"
#include "rkss/operators.hpp"
#include "rkss/signal.hpp"

using namespace rkss;

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kInf = std::numeric_limits<double>::infinity();

const Kernel& k1()
{
  static Kernel K = make_linear_spline_kernel(1, {0, 10});
  return K;
}

// Shared envelope constants for the analysis-side bounds (one sweep, reused).
const KernelConstants& kc1()
{
  static KernelConstants kc = kernel_constants(k1(), {0.1}, {});
  return kc;
}

std::size_t column_of(const Kernel& K, double anchor)
{
  for (std::size_t i = 0; i < K.anchors.size(); ++i)
    if (std::abs(K.anchors[i] - anchor) < 1e-9) return i;
  FAIL("no column anchored at " << anchor);
  return 0;
}

// Unit lattice on [0,10] with normalized indicator cells of width 1.
struct UnitConfig {
  SamplingSet set;
  Bupu bupu;
  UnitConfig()
      : set(generate_jittered(1.0, 0.0, Box::interval(0.0, 10.0), 7)),
        bupu(normalized_indicator_bupu(set, 1.0))
  {
  }
};

const UnitConfig& unit_cfg()
{
  static UnitConfig c;
  return c;
}

const OperatorBundle& unit_bundle()
{
  static OperatorBundle B = build_bundle(k1(), unit_cfg().set, unit_cfg().bupu);
  return B;
}

// Dense lattice, gap 0.1, for the contraction-rate checks.
struct FineConfig {
  SamplingSet set;
  Bupu bupu;
  FineConfig()
      : set(generate_jittered(0.1, 0.0, Box::interval(0.0, 10.0), 7)),
        bupu(normalized_indicator_bupu(set, covering_delta(set, 0.1)))
  {
  }
};

const FineConfig& fine_cfg()
{
  static FineConfig c;
  return c;
}

const OperatorBundle& fine_bundle()
{
  static OperatorBundle B = build_bundle(k1(), fine_cfg().set, fine_cfg().bupu);
  return B;
}

std::size_t point_at(const SamplingSet& G, double coord)
{
  for (std::size_t i = 0; i < G.size(); ++i)
    if (std::abs(G.coord(i) - coord) < 1e-12) return i;
  FAIL("no sampling point at " << coord);
  return 0;
}

double sup_diff(const Signal& a, const Signal& b)
{
  REQUIRE(a.coeffs.size() == b.coeffs.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.coeffs.size(); ++i)
    m = std::max(m, std::abs(a.coeffs[i] - b.coeffs[i]));
  return m;
}

} // namespace

TEST_CASE("analysis map reproduces coefficients of range elements")
{
  const Kernel& K = k1();

  // each materialized basis column maps to its own unit coefficient vector
  for (std::size_t k = 0; k < K.columns(); k += 7) {
    Signal c = apply_T(K, K.basis[k]);
    for (std::size_t j = 0; j < c.coeffs.size(); ++j) {
      double want = (j == k) ? 1.0 : 0.0;
      CHECK_THAT(c.coeffs[j], Catch::Matchers::WithinAbs(want, 1e-8));
    }
  }

  // zero in, zero out
  Signal z = apply_T(K, zero_signal(K));
  for (double c : z.coeffs) CHECK(c == 0.0);

  // a full random expansion is reproduced coefficient-by-coefficient
  Signal f = random_signal(K, 42, 1);
  CHECK(sup_diff(apply_T(K, f), f) < 1e-10);
}

TEST_CASE("analysis map integrates indicators to closed-form coefficients")
{
  const Kernel& K = k1();
  const double rho = kSqrt3 - 2.0;
  std::size_t i0 = column_of(K, 0.0);
  std::size_t i1 = column_of(K, 1.0);

  // ∫_0^1 of the dual column at 0: amp·(1 + ρ)/2 = (3 − √3)/2
  Signal c = apply_T(K, make_indicator(0.0, 1.0));
  CHECK_THAT(c.coeffs[i0], Catch::Matchers::WithinAbs((3.0 - kSqrt3) / 2.0, 1e-10));
  // the two columns flanking the cell receive equal weight
  CHECK_THAT(c.coeffs[i0] - c.coeffs[i1], Catch::Matchers::WithinAbs(0.0, 1e-12));
  // next neighbour picks up one extra decay factor: amp·(ρ + ρ²)/2
  std::size_t i2 = column_of(K, 2.0);
  CHECK_THAT(c.coeffs[i2],
             Catch::Matchers::WithinAbs(kSqrt3 * (rho + rho * rho) / 2.0, 1e-10));

  // a cell centered on the anchor weighs the middle 3/4 and neighbours 1/8 each
  Signal cc = apply_T(K, make_indicator(-0.5, 0.5));
  CHECK_THAT(cc.coeffs[i0],
             Catch::Matchers::WithinAbs(kSqrt3 * (0.75 + 0.25 * rho), 1e-10));
  CHECK_THAT(cc.coeffs[i0], Catch::Matchers::WithinAbs((3.0 + kSqrt3) / 4.0, 1e-10));
}

TEST_CASE("analysis map accepts plain callables through a flagged fallback")
{
  const Kernel& K = k1();

  bool flagged = false;
  Signal ca = apply_T(
      K, [](double y) { return y / 10.0; }, 0.02, &flagged);
  CHECK(flagged);

  // oracle: the same linear profile as a piecewise object covering every column
  PiecewisePoly lin;
  lin.breaks = {-60.0, 70.0};
  lin.coef = {{-6.0, 0.1}};
  Signal cb = apply_T(K, lin);
  CHECK(sup_diff(ca, cb) < 1e-9);

  CHECK_THROWS_AS(apply_T(
                      K, [](double) { return 0.0; }, 0.0, nullptr),
                  std::invalid_argument);
}

TEST_CASE("bundle matrices match their defining evaluations")
{
  const Kernel& K = k1();
  const OperatorBundle& B = unit_bundle();
  const SamplingSet& G = unit_cfg().set;

  CHECK(B.samples() == 11);
  CHECK(static_cast<std::size_t>(B.TU.cols()) == G.size());
  CHECK(static_cast<std::size_t>(B.TU.rows()) == K.columns());

  // masses pass straight through from the partition
  for (std::size_t g = 0; g < G.size(); ++g)
    CHECK(B.masses(static_cast<Eigen::Index>(g)) == unit_cfg().bupu.masses[g]);

  // interior diagonal entries equal ∫ over the centered unit cell: (3 + √3)/4
  auto j5 = static_cast<Eigen::Index>(point_at(G, 5.0));
  CHECK_THAT(B.A(j5, j5), Catch::Matchers::WithinAbs((3.0 + kSqrt3) / 4.0, 1e-10));
  CHECK_THAT(B.A(j5, j5), Catch::Matchers::WithinAbs(1.1830127018922193, 1e-10));

  // shift invariance: interior entries are constant along diagonals
  auto j4 = static_cast<Eigen::Index>(point_at(G, 4.0));
  auto j6 = static_cast<Eigen::Index>(point_at(G, 6.0));
  CHECK_THAT(B.A(j4, j4) - B.A(j5, j5), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(B.A(j4, j5) - B.A(j5, j6), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(B.A(j5, j4) - B.A(j6, j5), Catch::Matchers::WithinAbs(0.0, 1e-12));

  // the iteration matrix is the point evaluation of the smoothed partition
  Signal tu5 = apply_P(B, [&] {
    std::vector<double> e(G.size(), 0.0);
    e[static_cast<std::size_t>(j5)] = 1.0;
    return e;
  }());
  for (std::size_t g = 0; g < G.size(); ++g)
    CHECK_THAT(B.A(static_cast<Eigen::Index>(g), j5) - eval_signal(tu5, G.coord(g)),
               Catch::Matchers::WithinAbs(0.0, 1e-12));

  // mismatched partitions are rejected
  SamplingSet other = generate_jittered(1.0, 0.0, Box::interval(0.0, 9.0), 7);
  CHECK_THROWS_AS(build_bundle(K, other, unit_cfg().bupu), std::invalid_argument);
  Bupu vb = voronoi_bupu(other);
  CHECK_THROWS_AS(build_bundle(K, unit_cfg().set, vb), std::invalid_argument);
}

TEST_CASE("quasi-interpolation error operator annihilates matched signals")
{
  const Kernel& K = k1();
  const OperatorBundle& B = fine_bundle();

  // the normalized cells sum to one over the whole window
  const Bupu& U = unit_cfg().bupu;
  std::vector<PiecewisePoly> held;
  std::vector<const PiecewisePoly*> parts;
  std::vector<double> w;
  for (std::size_t g = 0; g < U.size(); ++g) {
    held.push_back(U.weight_function(g));
    w.push_back(1.0);
  }
  PiecewisePoly one = make_indicator(0.0, 10.0);
  for (const auto& h : held) parts.push_back(&h);
  parts.push_back(&one);
  w.push_back(-1.0);
  CHECK(combine(w, parts).sup_abs_all() < 1e-12);

  // zero input collapses to the empty piecewise object
  CHECK(pp_norm(apply_Q(B, zero_signal(K)), kInf).value == 0.0);

  // sample-and-rebuild error is controlled by the gap-0.1 oscillation constant
  double bound = kc1().r0_of(0.1) * 1.05;
  for (std::uint64_t s : {1ull, 2ull, 3ull}) {
    Signal f = random_signal(K, 99, s);
    double nf = signal_norm(f, kInf).value;
    REQUIRE(nf > 0.0);
    double nq = pp_norm(apply_Q(B, f), kInf).value;
    CHECK(nq <= bound * nf);
    CHECK(nq < nf); // strict contraction at this density
  }
}

TEST_CASE("sample expansions act as quasi-interpolants")
{
  const Kernel& K = k1();
  const OperatorBundle& B = unit_bundle();
  const SamplingSet& G = unit_cfg().set;

  // basis vector in: smoothed-partition column out (and frame column for S)
  std::size_t g0 = point_at(G, 5.0);
  std::vector<double> e(G.size(), 0.0);
  e[g0] = 1.0;
  Signal p = apply_P(B, e);
  Signal s = apply_S(B, e);
  auto j0 = static_cast<Eigen::Index>(g0);
  for (std::size_t k = 0; k < K.columns(); ++k) {
    auto ek = static_cast<Eigen::Index>(k);
    CHECK_THAT(p.coeffs[k] - B.TU(ek, j0), Catch::Matchers::WithinAbs(0.0, 1e-14));
    CHECK_THAT(s.coeffs[k] - B.masses(j0) * B.KG(ek, j0),
               Catch::Matchers::WithinAbs(0.0, 1e-14));
  }

  // wrong-length inputs are rejected
  CHECK_THROWS_AS(apply_P(B, std::vector<double>(3, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(apply_S(B, std::vector<double>(3, 0.0)), std::invalid_argument);

  // both quasi-interpolants land inside the range space
  std::vector<double> v(G.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = uniform01(5, 0, i) * 2.0 - 1.0;
  Signal pv = apply_P(B, v);
  CHECK(sup_diff(apply_T(K, pv), pv) < 1e-10);
  Signal sv = apply_S(B, v);
  CHECK(sup_diff(apply_T(K, sv), sv) < 1e-10);

  // composing with the reproducing projection changes nothing
  Signal f = random_signal(K, 13, 4);
  Signal tf = apply_T(K, f);
  CHECK(sup_diff(apply_P(B, bundle_samples(B, tf)), apply_P(B, bundle_samples(B, f))) <
        1e-10);
  CHECK(sup_diff(apply_S(B, bundle_samples(B, tf)), apply_S(B, bundle_samples(B, f))) <
        1e-10);
}

TEST_CASE("discrete iteration matrix agrees with the continuous operator at samples")
{
  const OperatorBundle& B = fine_bundle();
  std::vector<double> v(B.samples());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = uniform01(17, 1, i) * 2.0 - 1.0;

  Eigen::VectorXd lhs = B.A * Eigen::Map<const Eigen::VectorXd>(
                                  v.data(), static_cast<Eigen::Index>(v.size()));
  std::vector<double> rhs = bundle_samples(B, apply_P(B, v));
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK_THAT(lhs(static_cast<Eigen::Index>(i)) - rhs[i],
               Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("sampling iteration contracts at the certified rate")
{
  const Kernel& K = k1();
  const OperatorBundle& B = fine_bundle();
  const double bound = kc1().r0_of(0.1) * 1.05;

  for (std::uint64_t s = 0; s < 20; ++s) {
    Signal t = random_signal(K, 3000 + s, 0);
    // error operator of one correction step: f ↦ f − P(samples f)
    auto step = [&](const Signal& f) {
      Signal pf = apply_P(B, bundle_samples(B, f));
      Signal out = f;
      for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] -= pf.coeffs[i];
      return out;
    };
    Signal t1 = step(t);
    Signal t2 = step(t1);
    double n0 = signal_norm(t, kInf).value;
    double n1 = signal_norm(t1, kInf).value;
    double n2 = signal_norm(t2, kInf).value;
    REQUIRE(n0 > 0.0);
    CHECK(n1 <= bound * n0);
    if (n1 > 1e-14) CHECK(n2 <= bound * n1);
  }
}

TEST_CASE("geometric series inversion recovers originals from their interpolants")
{
  const Kernel& K = k1();
  const OperatorBundle& B = fine_bundle();
  const double r = kc1().r0_of(0.1);

  auto proj = [&](const Signal& f) { return apply_P(B, bundle_samples(B, f)); };

  // inverting around the reproducing map itself terminates immediately
  Signal f = random_signal(K, 21, 2);
  NeumannInfo info;
  Signal tf = neumann_apply([&](const Signal& g) { return apply_T(K, g); }, f, 30,
                            1e-12, 0.5, &info);
  CHECK(sup_diff(tf, apply_T(K, f)) < 1e-13);
  CHECK(info.terms == 1);
  REQUIRE(info.term_norms.size() == 1);
  CHECK(info.term_norms[0] == 0.0);
  CHECK_FALSE(info.measured_only);

  // with a certificate: P f ↦ f
  Signal pf = proj(f);
  NeumannInfo ia;
  Signal rec = neumann_apply(proj, pf, 60, 1e-10, r, &ia);
  CHECK(sup_diff(rec, f) < 5e-9);
  CHECK_FALSE(ia.measured_only);
  CHECK(ia.terms >= 2);
  for (std::size_t n = 1; n < ia.term_norms.size(); ++n)
    if (ia.term_norms[n - 1] > 1e-13)
      CHECK(ia.term_norms[n] <= r * 1.05 * ia.term_norms[n - 1]);

  // without a certificate the measured ratio is recorded and flagged
  NeumannInfo ib;
  Signal rec2 = neumann_apply(proj, pf, 60, 1e-10,
                              std::numeric_limits<double>::quiet_NaN(), &ib);
  CHECK(sup_diff(rec2, f) < 5e-9);
  CHECK(ib.measured_only);
  CHECK(ib.measured_ratio < 1.0);

  // a non-contracting map is refused up front with the measured ratio attached
  auto bad = [&](const Signal& g) {
    Signal out = proj(g);
    for (double& c : out.coeffs) c = -c;
    return out;
  };
  bool threw = false;
  try {
    neumann_apply(bad, pf, 60, 1e-10, std::numeric_limits<double>::quiet_NaN(),
                  nullptr);
  } catch (const certificate_error& e) {
    threw = true;
    CHECK(e.measured >= 1.0);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("does not contract"));
  }
  CHECK(threw);

  CHECK_THROWS_AS(neumann_apply(proj, pf, -1, 1e-10, r, nullptr),
                  std::invalid_argument);
  CHECK_THROWS_AS(neumann_apply(proj, pf, 30, 0.0, r, nullptr), std::invalid_argument);
}

TEST_CASE("cell averaging leaves step kernels fixed")
{
  PiecewisePoly gen = make_indicator(0.0, 1.0);
  Kernel H = make_shift_invariant_kernel({gen}, {0, 6});
  AveragedKernel avg = averaged_kernel(H, 1.0);

  for (double x : {0.25, 1.5, 3.75})
    for (double y : {0.5, 2.25, 4.5, 5.75})
      CHECK_THAT(avg.kernel.eval_raw(x, y) - H.eval_raw(x, y),
                 Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK(avg.kernel.type.find("+cell-averaged") != std::string::npos);
  CHECK(avg.kernel.params.at("average_delta0") == 1.0);
}

TEST_CASE("cell averaging defect shrinks with the cell width")
{
  const Kernel& K = k1();
  double prev = std::numeric_limits<double>::infinity();
  for (double d0 : {0.4, 0.2, 0.1}) {
    AveragedKernel avg = averaged_kernel(K, d0);
    double defect = 0.0;
    for (double x : {3.0, 5.5})
      for (int j = 0; j <= 60; ++j) {
        double y = 2.0 + 0.1 * j + 0.0173; // keep clear of both break lattices
        defect = std::max(defect,
                          std::abs(avg.kernel.eval_raw(x, y) - K.eval_raw(x, y)));
      }
    CHECK(defect > 0.0);
    CHECK(defect < prev);
    prev = defect;
  }
}

TEST_CASE("cell averaging respects the oscillation bound on range elements")
{
  const Kernel& K = k1();
  AveragedKernel avg = averaged_kernel(K, 0.1, &kc1());
  CHECK(avg.defect_bound == kc1().osc_of(0.1));

  for (std::uint64_t s : {1ull, 2ull}) {
    Signal f = random_signal(K, 777, s);
    Signal fd = apply_T(avg.kernel, signal_to_piecewise(f));
    Signal diff = fd;
    for (std::size_t i = 0; i < diff.coeffs.size(); ++i) diff.coeffs[i] -= f.coeffs[i];
    double ratio = signal_norm(diff, kInf).value / signal_norm(f, kInf).value;
    CHECK(ratio <= avg.defect_bound * 1.05);
    CHECK(ratio < 1.0);
  }

  // certification is exactly the bound dropping below one
  KernelConstants mock;
  mock.r1 = 0.5;
  mock.osc[0.4] = 0.35;
  mock.r0[0.4] = 0.2;
  mock.grid_resolution = 1e-3;
  mock.truncation_radius = 30.0;
  AveragedKernel cert = averaged_kernel(K, 0.4, &mock);
  CHECK(cert.certified);
  CHECK(cert.defect_bound == 0.35);
  CHECK_FALSE(avg.certified); // the radius-0.1 oscillation envelope exceeds one

  CHECK_THROWS_AS(averaged_kernel(K, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(averaged_kernel(K, -0.5), std::invalid_argument);
}
