#ifndef RKSS_SERIALIZE_HPP
#define RKSS_SERIALIZE_HPP

// CSV and JSON emission for sampling sets, signals, iteration traces, and the
// verification reports, plus the small file helpers the command-line front end
// uses.  All floating-point text is written with 17 significant digits so a
// rerun with the same seed reproduces files byte for byte.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkss/geometry.hpp"
#include "rkss/noise.hpp"
#include "rkss/reconstruct.hpp"
#include "rkss/signal.hpp"

namespace rkss {

using ordered_json = nlohmann::ordered_json;

inline std::string fmt_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Plain file helpers.
// ---------------------------------------------------------------------------
inline std::string read_text_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// CSV.
// ---------------------------------------------------------------------------
inline std::string points_to_csv(const SamplingSet& set)
{
  std::string s = "x\n";
  for (const auto& p : set.points) s += fmt_double(p[0]) + "\n";
  return s;
}

// One coordinate per row; an optional non-numeric header line is skipped.
inline std::vector<double> csv_to_coords(const std::string& text)
{
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      double v = std::stod(line, &used);
      while (used < line.size() && (line[used] == ' ' || line[used] == '\t')) ++used;
      if (used != line.size()) throw std::invalid_argument("trailing text");
      out.push_back(v);
    } catch (const std::exception&) {
      if (first) {
        first = false;
        continue; // header row
      }
      throw std::runtime_error("bad coordinate on line " + std::to_string(lineno));
    }
    first = false;
  }
  return out;
}

inline std::string coefficients_to_csv(const Signal& f)
{
  std::string s = "index,anchor,coefficient\n";
  for (std::size_t i = 0; i < f.coeffs.size(); ++i)
    s += std::to_string(i) + "," + fmt_double(f.kernel->anchors[i]) + "," +
         fmt_double(f.coeffs[i]) + "\n";
  return s;
}

// Reads the third column of a coefficients CSV back, in row order.
inline std::vector<double> csv_to_coefficients(const std::string& text)
{
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || lineno == 1) continue; // header
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 3)
      throw std::runtime_error("bad coefficient row on line " + std::to_string(lineno));
    try {
      out.push_back(std::stod(cells[2]));
    } catch (const std::exception&) {
      throw std::runtime_error("bad coefficient on line " + std::to_string(lineno));
    }
  }
  return out;
}

inline std::string values_to_csv(const SamplingSet& set, const std::vector<double>& v)
{
  if (v.size() != set.size())
    throw std::invalid_argument("values_to_csv: length mismatch");
  std::string s = "index,x,value\n";
  for (std::size_t i = 0; i < v.size(); ++i)
    s += std::to_string(i) + "," + fmt_double(set.points[i][0]) + "," +
         fmt_double(v[i]) + "\n";
  return s;
}

inline std::string trace_to_csv(const IterationTrace& tr)
{
  std::string s = "step,increment,residual,ratio\n";
  for (const IterationStep& st : tr.steps)
    s += std::to_string(st.n) + "," + fmt_double(st.increment) + "," +
         fmt_double(st.residual) + "," + fmt_double(st.ratio) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// JSON report fragments.  NaN fields serialize as null.
// ---------------------------------------------------------------------------
inline ordered_json json_number_or_null(double v)
{
  if (std::isnan(v)) return nullptr;
  return v;
}

inline ordered_json trace_summary_json(const IterationTrace& tr)
{
  ordered_json j;
  j["stop_reason"] = to_string(tr.stop_reason);
  j["steps"] = tr.steps.empty() ? 0 : tr.steps.back().n;
  j["certified_r"] = json_number_or_null(tr.certified_r);
  j["measured_only"] = tr.measured_only;
  if (!tr.steps.empty()) {
    j["final_increment"] = tr.steps.back().increment;
    j["final_residual"] = tr.steps.back().residual;
  }
  return j;
}

inline ordered_json gap_stats_json(const SamplingSet& set)
{
  ordered_json j;
  j["size"] = set.size();
  j["domain"] = {set.domain.lo[0], set.domain.hi[0]};
  j["method"] = set.method;
  double d0 = maximal_gap(set);
  j["maximal_gap"] = d0;
  double dc = d0;
  if (gap_counts(set, dc).min_count < 1) dc *= 1.0 + 1e-9;
  GapCounts counts = gap_counts(set, dc);
  j["min_count"] = counts.min_count;
  j["max_count"] = counts.max_count;
  return j;
}

inline ordered_json stability_json(const StabilityReport& rep)
{
  ordered_json j;
  j["p"] = std::isinf(rep.p) ? ordered_json("inf") : ordered_json(rep.p);
  j["delta0"] = rep.delta0;
  j["min_count"] = rep.min_count;
  j["max_count"] = rep.max_count;
  j["certified_r"] = json_number_or_null(rep.r_certified);
  j["signals"] = rep.signals;
  j["violations"] = rep.violations;
  j["all_pass"] = rep.all_pass();
  j["worst_lower_slack"] = json_number_or_null(rep.worst_lower_slack);
  j["worst_upper_slack"] = json_number_or_null(rep.worst_upper_slack);
  return j;
}

inline ordered_json derivative_stability_json(const DerivativeStabilityReport& rep)
{
  ordered_json j;
  j["b0"] = rep.b0;
  j["p"] = std::isinf(rep.p) ? ordered_json("inf") : ordered_json(rep.p);
  j["delta0"] = rep.delta0;
  j["measured_ratio"] = rep.measured_ratio;
  j["rf"] = rep.rf;
  j["ratio_ok"] = rep.ratio_ok;
  j["gap_ok"] = rep.gap_ok;
  j["claim"] = rep.claim;
  j["lower"] = rep.lower;
  j["middle"] = rep.middle;
  j["upper"] = rep.upper;
  j["holds"] = rep.holds;
  return j;
}

inline ordered_json error_report_json(const ErrorReport& rep)
{
  ordered_json j;
  j["displayer"] = rep.displayer;
  j["trials"] = rep.trials;
  j["alpha_delta"] = rep.alpha_delta;
  j["sigma2"] = rep.sigma2;
  j["low_trials"] = rep.low_trials;
  j["points"] = ordered_json::array();
  for (const PointStats& ps : rep.points) {
    ordered_json p;
    p["x"] = ps.x;
    p["mean_error"] = ps.mean_error;
    p["emp_var"] = ps.emp_var;
    p["pred_var"] = ps.pred_var;
    p["se_mean"] = ps.se_mean;
    p["se_var"] = ps.se_var;
    j["points"].push_back(p);
  }
  return j;
}

} // namespace rkss

#endif // RKSS_SERIALIZE_HPP
