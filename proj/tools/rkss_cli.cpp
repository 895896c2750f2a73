// Command-line front end: build kernels, generate sampling sets, run
// reconstructions and noise experiments, and emit CSV/JSON reports.
//
// Exit codes: 0 success; 2 configuration error (bad flags, malformed config,
// missing files, out-of-range parameters); 3 numerical refusal (divergent
// iteration or a contraction certificate that cannot be granted).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rkss/bupu.hpp"
#include "rkss/constants.hpp"
#include "rkss/geometry.hpp"
#include "rkss/kernel.hpp"
#include "rkss/noise.hpp"
#include "rkss/operators.hpp"
#include "rkss/parallel.hpp"
#include "rkss/reconstruct.hpp"
#include "rkss/serialize.hpp"
#include "rkss/signal.hpp"

namespace {

using namespace rkss;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Thrown for anything that is the caller's fault; mapped to exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Workdir-relative paths.
// ---------------------------------------------------------------------------
struct Paths {
  std::string workdir = ".";

  std::string operator()(const std::string& name) const
  {
    std::filesystem::path p(name);
    if (p.is_absolute()) return name;
    return (std::filesystem::path(workdir) / p).string();
  }
};

// ---------------------------------------------------------------------------
// JSON config helpers.
// ---------------------------------------------------------------------------
const ordered_json& need(const ordered_json& j, const std::string& key)
{
  if (!j.contains(key)) throw config_error("config: missing key \"" + key + "\"");
  return j.at(key);
}

double parse_p(const ordered_json& j)
{
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "Inf" || s == "infinity") return kInf;
    throw config_error("config: p must be a number ≥ 1 or \"inf\"");
  }
  if (!j.is_number()) throw config_error("config: p must be a number ≥ 1 or \"inf\"");
  double p = j.get<double>();
  if (!(p >= 1.0)) throw config_error("config: p must be ≥ 1");
  return p;
}

ordered_json parse_config_file(const std::string& path)
{
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw config_error(e.what());
  }
  try {
    return ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw config_error("config: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Kernel construction from a spec {type, n, window, res}.
// ---------------------------------------------------------------------------
struct KernelSpec {
  std::string type = "linear_spline";
  int n = 1;
  int window_lo = 0;
  int window_hi = 10;
  double res = 1e-3;
};

KernelSpec kernel_spec_from_json(const ordered_json& j)
{
  KernelSpec s;
  s.type = need(j, "type").get<std::string>();
  if (j.contains("n")) s.n = j.at("n").get<int>();
  if (j.contains("window")) {
    const auto& w = j.at("window");
    if (!w.is_array() || w.size() != 2)
      throw config_error("config: kernel window must be [lo, hi]");
    s.window_lo = w[0].get<int>();
    s.window_hi = w[1].get<int>();
  }
  if (j.contains("res")) s.res = j.at("res").get<double>();
  return s;
}

Kernel build_kernel(const KernelSpec& s)
{
  if (!(s.res > 0.0)) throw config_error("kernel: res must be positive");
  if (s.window_lo >= s.window_hi) throw config_error("kernel: window must have lo < hi");
  try {
    if (s.type == "linear_spline")
      return make_linear_spline_kernel(s.n, {s.window_lo, s.window_hi}, s.res);
    if (s.type == "haar")
      return make_shift_invariant_kernel({make_indicator(0.0, 1.0)},
                                         {s.window_lo, s.window_hi}, s.res);
    if (s.type == "bspline") {
      std::vector<double> knots;
      for (int k = s.window_lo - 1; k <= s.window_hi + 1; ++k)
        knots.push_back(static_cast<double>(k));
      long m = static_cast<long>(knots.size()) - s.n - 1;
      if (m < 1) throw config_error("kernel: window too small for the order");
      return make_bspline_kernel(s.n, knots, {0, m - 1}, s.res);
    }
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("kernel: ") + e.what());
  }
  throw config_error("kernel: unknown type \"" + s.type +
                     "\" (expected linear_spline, haar, or bspline)");
}

ordered_json kernel_json(const Kernel& K)
{
  ordered_json j;
  j["type"] = K.type;
  j["symmetric"] = K.symmetric;
  j["columns"] = K.columns();
  j["domain"] = {K.domain.lo[0], K.domain.hi[0]};
  j["grid_resolution"] = K.grid_resolution;
  ordered_json params;
  for (const auto& [k, v] : K.params) params[k] = v;
  j["params"] = params;
  return j;
}

// ---------------------------------------------------------------------------
// Sampling sets and partitions from config.
// ---------------------------------------------------------------------------
SamplingSet build_sampling(const ordered_json& j, const Kernel& K, const Paths& at)
{
  Box domain = Box::interval(K.domain.lo[0], K.domain.hi[0]);
  if (j.contains("csv")) {
    std::string path = at(j.at("csv").get<std::string>());
    std::vector<double> coords;
    try {
      coords = csv_to_coords(read_text_file(path));
    } catch (const std::exception& e) {
      throw config_error("sampling: " + std::string(e.what()));
    }
    std::vector<std::vector<double>> pts;
    pts.reserve(coords.size());
    for (double c : coords) pts.push_back({c});
    try {
      return make_sampling_set(std::move(pts), std::move(domain), "file");
    } catch (const std::invalid_argument& e) {
      throw config_error("sampling: " + std::string(e.what()));
    }
  }
  if (j.contains("generate")) {
    const auto& g = j.at("generate");
    double delta = need(g, "delta").get<double>();
    double jitter = g.contains("jitter") ? g.at("jitter").get<double>() : 0.0;
    std::uint64_t seed = g.contains("seed") ? g.at("seed").get<std::uint64_t>() : 0;
    try {
      return generate_jittered(delta, jitter, domain, seed);
    } catch (const std::invalid_argument& e) {
      throw config_error("sampling: " + std::string(e.what()));
    }
  }
  throw config_error("config: sampling needs either \"csv\" or \"generate\"");
}

Bupu build_bupu(const std::string& kind, const SamplingSet& set)
{
  try {
    if (kind == "indicator")
      return normalized_indicator_bupu(set, covering_delta(set, maximal_gap(set)));
    if (kind == "voronoi") return voronoi_bupu(set);
  } catch (const std::invalid_argument& e) {
    throw config_error("bupu: " + std::string(e.what()));
  }
  throw config_error("bupu: unknown kind \"" + kind +
                     "\" (expected indicator or voronoi)");
}

NoiseModel build_noise(const ordered_json& j)
{
  std::string kind = need(j, "kind").get<std::string>();
  double sigma = need(j, "sigma").get<double>();
  try {
    if (kind == "uniform") return noise_uniform(std::sqrt(3.0) * sigma);
    if (kind == "truncated_gaussian") return noise_truncated_gaussian(sigma);
  } catch (const std::invalid_argument& e) {
    throw config_error("noise: " + std::string(e.what()));
  }
  throw config_error("noise: unknown kind \"" + kind +
                     "\" (expected uniform or truncated_gaussian)");
}

Displayer parse_displayer(const std::string& s)
{
  if (s == "neumann_ap") return Displayer::neumann_ap;
  if (s == "neumann_frame") return Displayer::neumann_frame;
  if (s == "plain_T") return Displayer::plain_T;
  if (s == "plain_K") return Displayer::plain_K;
  throw config_error("displayer: unknown \"" + s + "\"");
}

double sup_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------
// kernel-info
// ---------------------------------------------------------------------------
struct KernelInfoArgs {
  KernelSpec spec;
  std::vector<double> deltas{0.1, 0.2};
  std::vector<double> qs;
  std::string out;
  bool find_r2_crossing = false;
  double crossing_lo = 0.02;
  double crossing_hi = 0.2;
  int crossing_steps = 6;
};

int cmd_kernel_info(const KernelInfoArgs& a, const Paths& at)
{
  Kernel K = build_kernel(a.spec);
  KernelConstants kc;
  try {
    kc = kernel_constants(K, a.deltas, a.qs);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("constants: ") + e.what());
  }

  ordered_json j;
  j["kernel"] = kernel_json(K);
  j["r1"] = kc.r1;
  j["rows"] = ordered_json::array();

  std::printf("type        %s\n", K.type.c_str());
  std::printf("symmetric   %s\n", K.symmetric ? "true" : "false");
  std::printf("columns     %zu\n", K.columns());
  std::printf("domain      [%s, %s]\n", fmt_double(K.domain.lo[0]).c_str(),
              fmt_double(K.domain.hi[0]).c_str());
  std::printf("r1          %s\n", fmt_double(kc.r1).c_str());
  std::printf("%10s %14s %14s %6s %6s\n", "delta", "r0", "r2", "r0<1", "r2<1");
  for (double d : a.deltas) {
    double r0 = kc.r0_of(d);
    double r2 = kc.r2_of(d);
    std::printf("%10s %14s %14s %6s %6s\n", fmt_double(d).c_str(),
                fmt_double(r0).c_str(), fmt_double(r2).c_str(),
                r0 < 1.0 ? "yes" : "no", r2 < 1.0 ? "yes" : "no");
    ordered_json row;
    row["delta"] = d;
    row["r0"] = r0;
    row["r2"] = r2;
    row["r0_certified"] = r0 < 1.0;
    row["r2_certified"] = r2 < 1.0;
    j["rows"].push_back(row);
  }
  if (!a.qs.empty()) {
    j["weighted_rows"] = ordered_json::array();
    std::printf("%10s %10s %14s %14s\n", "delta", "q", "a", "b");
    for (double d : a.deltas) {
      if (!(d > 0.0)) continue;
      for (double q : a.qs) {
        double aq = kc.aq_of(d, q);
        double bq = kc.bq_of(d, q);
        std::printf("%10s %10s %14s %14s\n", fmt_double(d).c_str(),
                    fmt_double(q).c_str(), fmt_double(aq).c_str(),
                    fmt_double(bq).c_str());
        ordered_json row;
        row["delta"] = d;
        row["q"] = q;
        row["a"] = aq;
        row["b"] = bq;
        j["weighted_rows"].push_back(row);
      }
    }
  }

  if (a.find_r2_crossing) {
    // bisect for the gap where the two-sided series rate reaches one
    double lo = a.crossing_lo, hi = a.crossing_hi;
    if (!(lo > 0.0) || !(lo < hi)) throw config_error("crossing: need 0 < lo < hi");
    auto r2_at = [&](double d) { return kernel_constants(K, {d}, {}).r2_of(d); };
    double rlo = r2_at(lo), rhi = r2_at(hi);
    if (!(rlo < 1.0) || !(rhi >= 1.0))
      throw certificate_error("crossing: bracket does not straddle one (r2(lo) = " +
                                  fmt_double(rlo) + ", r2(hi) = " + fmt_double(rhi) +
                                  ")",
                              rlo);
    for (int i = 0; i < a.crossing_steps; ++i) {
      double mid = 0.5 * (lo + hi);
      if (r2_at(mid) < 1.0)
        lo = mid;
      else
        hi = mid;
    }
    double star = 0.5 * (lo + hi);
    std::printf("r2_crossing %s\n", fmt_double(star).c_str());
    j["r2_crossing"] = star;
  }

  if (!a.out.empty()) write_text_file(at(a.out), j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// sample-gen
// ---------------------------------------------------------------------------
struct SampleGenArgs {
  std::string kind = "lattice";
  double delta = 0.1;
  double jitter = 0.0;
  std::vector<double> domain{0.0, 10.0};
  std::uint64_t seed = 0;
  std::string out;
  std::string stats;
};

int cmd_sample_gen(const SampleGenArgs& a, const Paths& at)
{
  if (a.kind != "lattice" && a.kind != "jitter")
    throw config_error("sample-gen: kind must be lattice or jitter");
  if (a.kind == "lattice" && a.jitter != 0.0)
    throw config_error("sample-gen: lattice kind does not take a jitter amount");
  if (a.kind == "jitter" && !(a.jitter > 0.0))
    throw config_error("sample-gen: jitter kind needs --jitter > 0");
  if (a.domain.size() != 2 || !(a.domain[0] < a.domain[1]))
    throw config_error("sample-gen: domain must be lo hi with lo < hi");
  if (a.out.empty()) throw config_error("sample-gen: --out is required");

  SamplingSet set;
  try {
    set = generate_jittered(a.delta, a.jitter, Box::interval(a.domain[0], a.domain[1]),
                            a.seed);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("sample-gen: ") + e.what());
  }
  write_text_file(at(a.out), points_to_csv(set));
  ordered_json stats = gap_stats_json(set);
  if (!a.stats.empty()) write_text_file(at(a.stats), stats.dump(2) + "\n");
  std::printf("points      %zu\n", set.size());
  std::printf("maximal_gap %s\n", fmt_double(stats["maximal_gap"].get<double>()).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------
int cmd_reconstruct(const std::string& config_path, const Paths& at)
{
  ordered_json cfg = parse_config_file(at(config_path));

  Kernel K = build_kernel(kernel_spec_from_json(need(cfg, "kernel")));
  SamplingSet set = build_sampling(need(cfg, "sampling"), K, at);
  std::string bupu_kind =
      cfg.contains("bupu") ? cfg.at("bupu").get<std::string>() : "indicator";
  Bupu bupu = build_bupu(bupu_kind, set);
  OperatorBundle bundle;
  try {
    bundle = build_bundle(K, set, bupu);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("bundle: ") + e.what());
  }

  std::string algorithm = need(cfg, "algorithm").get<std::string>();
  if (algorithm != "ap" && algorithm != "ap_discrete" && algorithm != "frame")
    throw config_error("config: algorithm must be ap, ap_discrete, or frame");
  int nmax = cfg.contains("nmax") ? cfg.at("nmax").get<int>() : 60;
  double tol = cfg.contains("tol") ? cfg.at("tol").get<double>() : 1e-9;
  double p = cfg.contains("p") ? parse_p(cfg.at("p")) : kInf;
  double certified_r = cfg.contains("certified_r")
                           ? cfg.at("certified_r").get<double>()
                           : std::numeric_limits<double>::quiet_NaN();

  int fixed_steps = -1;
  if (cfg.contains("stopping")) {
    const auto& st = cfg.at("stopping");
    std::string mode = need(st, "mode").get<std::string>();
    if (mode == "snr" || mode == "sner") {
      NoiseBudget budget;
      budget.r0 = need(st, "r0").get<double>();
      try {
        if (mode == "snr") {
          budget.snr_db = need(st, "snr_db").get<double>();
          fixed_steps = static_cast<int>(stopping_step_snr(budget));
        } else {
          budget.sner_db = need(st, "sner_db").get<double>();
          fixed_steps = static_cast<int>(stopping_step_sner(budget));
        }
      } catch (const std::invalid_argument& e) {
        throw config_error(std::string("stopping: ") + e.what());
      }
    } else if (mode != "tolerance") {
      throw config_error("stopping: mode must be tolerance, snr, or sner");
    }
  }

  // input samples: either read from a CSV or taken from a generated truth signal
  Signal truth;
  bool have_truth = false;
  if (cfg.contains("truth")) {
    const auto& t = cfg.at("truth");
    truth = random_signal(K, need(t, "signal_seed").get<std::uint64_t>(), 0);
    have_truth = true;
  }
  std::vector<double> c_clean;
  if (cfg.contains("samples_csv")) {
    std::string path = at(cfg.at("samples_csv").get<std::string>());
    try {
      c_clean = csv_to_coords(read_text_file(path));
    } catch (const std::exception& e) {
      throw config_error("samples: " + std::string(e.what()));
    }
    if (c_clean.size() != set.size())
      throw config_error("samples: expected " + std::to_string(set.size()) +
                         " values, got " + std::to_string(c_clean.size()));
  } else if (have_truth) {
    c_clean = bundle_samples(bundle, truth);
  } else {
    throw config_error("config: need either \"samples_csv\" or \"truth\"");
  }

  std::vector<double> c0 = c_clean;
  if (cfg.contains("noise")) {
    const auto& nj = cfg.at("noise");
    NoiseModel noise = build_noise(nj);
    std::uint64_t nseed = nj.contains("seed") ? nj.at("seed").get<std::uint64_t>() : 0;
    for (std::size_t g = 0; g < c0.size(); ++g) c0[g] += noise.draw(nseed, g, 0);
  }

  const ordered_json& out = need(cfg, "out");
  std::string coeff_path = at(need(out, "coefficients").get<std::string>());
  std::string trace_path = at(need(out, "trace").get<std::string>());
  std::string summary_path = at(need(out, "summary").get<std::string>());

  ordered_json summary;
  summary["algorithm"] = algorithm;
  summary["kernel"] = kernel_json(K);
  summary["samples"] = set.size();
  summary["bupu"] = bupu_kind;
  summary["nmax"] = nmax;
  summary["tol"] = tol;
  summary["p"] = std::isinf(p) ? ordered_json("inf") : ordered_json(p);
  summary["fixed_steps"] = fixed_steps >= 0 ? ordered_json(fixed_steps) : nullptr;

  auto finish = [&](const IterationTrace& trace, const std::string& payload_csv,
                    const std::vector<double>* values) -> int {
    write_text_file(coeff_path, payload_csv);
    write_text_file(trace_path, trace_to_csv(trace));
    summary["trace"] = trace_summary_json(trace);
    if (have_truth) {
      if (values) {
        summary["sup_error_at_samples"] = sup_abs_diff(*values, c_clean);
      }
    }
    write_text_file(summary_path, summary.dump(2) + "\n");
    std::printf("stop_reason %s\n", to_string(trace.stop_reason));
    std::printf("steps       %d\n", trace.steps.empty() ? 0 : trace.steps.back().n);
    bool diverged = trace.stop_reason == StopReason::diverged;
    return diverged ? 3 : 0;
  };

  try {
    if (algorithm == "ap_discrete") {
      DiscreteResult res = ap_discrete(bundle, c0, nmax, tol, p, certified_r,
                                       fixed_steps);
      return finish(res.trace, values_to_csv(set, res.values), &res.values);
    }
    ApResult res = algorithm == "ap"
                       ? ap_reconstruct(bundle, c0, nmax, tol, p, certified_r,
                                        fixed_steps)
                       : frame_reconstruct(bundle, c0, nmax, tol, p, certified_r,
                                           fixed_steps);
    std::vector<double> at_samples = bundle_samples(bundle, res.signal);
    if (have_truth) {
      summary["coeff_sup_error"] = sup_abs_diff(res.signal.coeffs, truth.coeffs);
    }
    return finish(res.trace, coefficients_to_csv(res.signal), &at_samples);
  } catch (const divergence_error& e) {
    // still write what we observed, then report the refusal
    write_text_file(trace_path, trace_to_csv(e.trace));
    summary["trace"] = trace_summary_json(e.trace);
    summary["error"] = e.what();
    write_text_file(summary_path, summary.dump(2) + "\n");
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

// ---------------------------------------------------------------------------
// noise-sweep
// ---------------------------------------------------------------------------
int cmd_noise_sweep(const std::string& config_path, const Paths& at)
{
  ordered_json cfg = parse_config_file(at(config_path));

  Kernel K = build_kernel(kernel_spec_from_json(need(cfg, "kernel")));
  std::vector<double> deltas = need(cfg, "deltas").get<std::vector<double>>();
  if (deltas.empty()) throw config_error("config: deltas must be nonempty");
  std::vector<double> eval_points =
      need(cfg, "eval_points").get<std::vector<double>>();
  NoiseModel noise = build_noise(need(cfg, "noise"));
  std::size_t trials = need(cfg, "trials").get<std::size_t>();
  Displayer displayer = parse_displayer(need(cfg, "displayer").get<std::string>());
  int steps = cfg.contains("steps") ? cfg.at("steps").get<int>() : 60;
  std::uint64_t seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : 0;
  double jitter = cfg.contains("jitter") ? cfg.at("jitter").get<double>() : 0.0;
  std::uint64_t sampling_seed =
      cfg.contains("sampling_seed") ? cfg.at("sampling_seed").get<std::uint64_t>() : 0;
  Signal g = random_signal(
      K, need(need(cfg, "truth"), "signal_seed").get<std::uint64_t>(), 0);

  std::vector<double> certificates;
  if (cfg.contains("certificates")) {
    certificates = cfg.at("certificates").get<std::vector<double>>();
    if (certificates.size() != deltas.size())
      throw config_error("config: certificates must align with deltas");
  }
  bool needs_cert =
      displayer == Displayer::neumann_ap || displayer == Displayer::neumann_frame;

  const ordered_json& out = need(cfg, "out");
  std::string csv_path = at(need(out, "csv").get<std::string>());
  std::string json_path =
      out.contains("json") ? at(out.at("json").get<std::string>()) : "";

  std::string csv = "delta,x,mean_err,var,var_over_alpha_sigma2,energy_integral\n";
  ordered_json reports = ordered_json::array();

  for (std::size_t i = 0; i < deltas.size(); ++i) {
    double delta = deltas[i];
    SamplingSet set;
    try {
      set = generate_jittered(delta, jitter,
                              Box::interval(K.domain.lo[0], K.domain.hi[0]),
                              sampling_seed);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("sampling: ") + e.what());
    }
    Bupu u = build_bupu("indicator", set);
    OperatorBundle B;
    try {
      B = build_bundle(K, set, u);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("bundle: ") + e.what());
    }
    double cert = std::numeric_limits<double>::quiet_NaN();
    if (!certificates.empty()) {
      cert = certificates[i];
    } else if (needs_cert) {
      // derive a contraction gate from the one-sided modulus envelope at this gap
      OneSidedNorms os = one_sided_modulus_norms(K, maximal_gap(set));
      cert = os.y_side;
    }
    ErrorReport rep;
    try {
      rep = monte_carlo_error(B, g, noise, trials, eval_points, displayer, seed, steps,
                              cert);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("experiment: ") + e.what());
    }
    for (const PointStats& ps : rep.points) {
      double ratio = ps.emp_var / (rep.alpha_delta * rep.sigma2);
      csv += fmt_double(delta) + "," + fmt_double(ps.x) + "," +
             fmt_double(ps.mean_error) + "," + fmt_double(ps.emp_var) + "," +
             fmt_double(ratio) + "," + fmt_double(energy_integral(K, ps.x)) + "\n";
    }
    ordered_json entry = error_report_json(rep);
    entry["delta"] = delta;
    entry["certificate"] = json_number_or_null(cert);
    reports.push_back(entry);
    std::printf("delta %s done (%zu trials)\n", fmt_double(delta).c_str(), trials);
  }

  write_text_file(csv_path, csv);
  if (!json_path.empty()) {
    ordered_json j;
    j["kernel"] = kernel_json(K);
    j["displayer"] = to_string(displayer);
    j["trials"] = trials;
    j["sigma2"] = noise.sigma2;
    j["reports"] = reports;
    write_text_file(json_path, j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// stability-check
// ---------------------------------------------------------------------------
int cmd_stability_check(const std::string& config_path, const Paths& at)
{
  ordered_json cfg = parse_config_file(at(config_path));

  Kernel K = build_kernel(kernel_spec_from_json(need(cfg, "kernel")));
  SamplingSet set = build_sampling(need(cfg, "sampling"), K, at);
  std::string bupu_kind =
      cfg.contains("bupu") ? cfg.at("bupu").get<std::string>() : "indicator";
  Bupu bupu = build_bupu(bupu_kind, set);

  std::vector<double> ps;
  for (const auto& pj : need(cfg, "p")) ps.push_back(parse_p(pj));
  if (ps.empty()) throw config_error("config: p list must be nonempty");

  std::size_t n_signals = need(cfg, "signals").get<std::size_t>();
  std::uint64_t signal_seed = need(cfg, "signal_seed").get<std::uint64_t>();
  std::vector<Signal> signals;
  signals.reserve(n_signals);
  for (std::size_t i = 0; i < n_signals; ++i)
    signals.push_back(random_signal(K, signal_seed + i, 0));

  // Certificate: explicit value, or derived from the one-sided modulus
  // envelope at a caller-provided gap that must dominate the measured one.
  bool explicit_cert = cfg.contains("certificate") && !cfg.at("certificate").is_null();
  double gap = 0.0;
  OneSidedNorms os{0.0, 0.0};
  if (!explicit_cert) {
    gap = need(cfg, "certificate_gap").get<double>();
    double measured = maximal_gap(set);
    if (measured > gap)
      throw config_error("config: certificate_gap " + fmt_double(gap) +
                         " is below the measured gap " + fmt_double(measured));
    os = one_sided_modulus_norms(K, gap);
  }

  ordered_json j;
  j["kernel"] = kernel_json(K);
  j["sampling"] = gap_stats_json(set);
  j["bupu"] = bupu_kind;
  j["reports"] = ordered_json::array();
  bool all_pass = true;
  for (double p : ps) {
    double r;
    if (explicit_cert)
      r = cfg.at("certificate").get<double>();
    else if (std::isinf(p))
      r = os.y_side;
    else
      r = std::pow(os.x_side, 1.0 - 1.0 / p) * std::pow(os.y_side, 1.0 / p);
    StabilityReport rep = stability_check(K, set, bupu, p, signals, r);
    all_pass = all_pass && rep.all_pass();
    j["reports"].push_back(stability_json(rep));
    std::printf("p %-4s violations %zu / %zu\n",
                std::isinf(p) ? "inf" : fmt_double(p).c_str(), rep.violations,
                rep.signals);
  }
  j["all_pass"] = all_pass;

  if (cfg.contains("derivative")) {
    const auto& dj = cfg.at("derivative");
    double b0 = need(dj, "b0").get<double>();
    double dp = parse_p(need(dj, "p"));
    ordered_json drows = ordered_json::array();
    std::size_t claims = 0, holds = 0;
    for (const Signal& f : signals) {
      DerivativeStabilityReport rep = derivative_stability_check(f, b0, set, bupu, dp);
      claims += rep.claim ? 1 : 0;
      holds += rep.holds ? 1 : 0;
      drows.push_back(derivative_stability_json(rep));
    }
    j["derivative"] = {{"claims", claims}, {"holds", holds}, {"reports", drows}};
    std::printf("derivative claims %zu holds %zu / %zu\n", claims, holds,
                signals.size());
  }

  const ordered_json& out = need(cfg, "out");
  write_text_file(at(need(out, "json").get<std::string>()), j.dump(2) + "\n");
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"sampling and reconstruction toolkit for reproducing-kernel "
               "signal spaces"};
  app.require_subcommand(1);

  Paths at;
  int threads = 0;
  app.add_option("--workdir", at.workdir, "directory all relative paths resolve to")
      ->capture_default_str();
  app.add_option("--threads", threads, "cap the worker pool (0 = machine default)");

  KernelInfoArgs ki;
  CLI::App* info = app.add_subcommand("kernel-info", "print kernel constants");
  info->add_option("--type", ki.spec.type, "linear_spline | haar | bspline")
      ->capture_default_str();
  info->add_option("--n", ki.spec.n, "kernel order parameter")->capture_default_str();
  info->add_option("--window", [&ki](const std::vector<std::string>& v) {
        ki.spec.window_lo = std::stoi(v.at(0));
        ki.spec.window_hi = std::stoi(v.at(1));
        return true;
      },
      "anchor window lo hi")
      ->expected(2);
  info->add_option("--res", ki.spec.res, "envelope grid resolution")
      ->capture_default_str();
  info->add_option("--deltas", ki.deltas, "gap values for the constants table")
      ->expected(-1);
  info->add_option("--qs", ki.qs, "weight exponents for the weighted bounds")
      ->expected(-1);
  info->add_option("--out", ki.out, "write the table as JSON here");
  info->add_flag("--find-r2-crossing", ki.find_r2_crossing,
                 "bisect for the gap where r2 reaches one");
  info->add_option("--crossing-lo", ki.crossing_lo, "crossing bracket lower end")
      ->capture_default_str();
  info->add_option("--crossing-hi", ki.crossing_hi, "crossing bracket upper end")
      ->capture_default_str();
  info->add_option("--crossing-steps", ki.crossing_steps, "bisection step count")
      ->capture_default_str();

  SampleGenArgs sg;
  CLI::App* gen = app.add_subcommand("sample-gen", "generate a sampling set CSV");
  gen->add_option("--kind", sg.kind, "lattice | jitter")->capture_default_str();
  gen->add_option("--delta", sg.delta, "lattice spacing")->capture_default_str();
  gen->add_option("--jitter", sg.jitter, "per-point displacement bound")
      ->capture_default_str();
  gen->add_option("--domain", sg.domain, "interval lo hi")->expected(2);
  gen->add_option("--seed", sg.seed, "jitter seed")->capture_default_str();
  gen->add_option("--out", sg.out, "points CSV path")->required();
  gen->add_option("--stats", sg.stats, "gap statistics JSON path");

  std::string rc_config;
  CLI::App* rc = app.add_subcommand("reconstruct", "run a reconstruction experiment");
  rc->add_option("--config", rc_config, "experiment config JSON")->required();

  std::string ns_config;
  CLI::App* ns = app.add_subcommand("noise-sweep", "Monte-Carlo noise experiment");
  ns->add_option("--config", ns_config, "sweep config JSON")->required();

  std::string sc_config;
  CLI::App* sc = app.add_subcommand("stability-check", "verify sampling stability");
  sc->add_option("--config", sc_config, "stability config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (threads > 0) set_thread_count(threads);

  try {
    if (*info) return cmd_kernel_info(ki, at);
    if (*gen) return cmd_sample_gen(sg, at);
    if (*rc) return cmd_reconstruct(rc_config, at);
    if (*ns) return cmd_noise_sweep(ns_config, at);
    if (*sc) return cmd_stability_check(sc_config, at);
  } catch (const divergence_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const certificate_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
