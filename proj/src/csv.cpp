#include "vndiff/csv.hpp"

#include <cstdio>

#include <json.hpp>

namespace vndiff {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_meta(std::ostream& os, const MetaList& meta) {
  os << "# tool=vndiff 0.1.0\n";
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
}

void write_reference_csv(std::ostream& os, const LatticeDistribution& d, const MetaList& meta) {
  write_meta(os, meta);
  if (d.is_sample()) {
    os << "sample\n";
    for (double x : d.samples_raw()) os << fmt17(x) << "\n";
  } else {
    os << "x,p\n";
    for (std::size_t i = 0; i < d.size(); ++i)
      os << fmt17(d.atoms()[i]) << "," << fmt17(d.probs()[i]) << "\n";
  }
}

void write_density_csv(std::ostream& os, const StationaryDensity& d, const MetaList& meta,
                       std::size_t max_rows) {
  write_meta(os, meta);
  os << "x,pdf,cdf\n";
  for (const auto& row : d.tabulate(max_rows))
    os << fmt17(row.x) << "," << fmt17(row.pdf) << "," << fmt17(row.cdf) << "\n";
}

void write_coefficient_csv(std::ostream& os, const CoefficientFn& v, double lo, double hi,
                           std::size_t points, const MetaList& meta) {
  write_meta(os, meta);
  os << "x,v\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    os << fmt17(x) << "," << fmt17(v(x)) << "\n";
  }
}

void write_error_report_csv(std::ostream& os, const ErrorReport& r, const MetaList& meta) {
  write_meta(os, meta);
  os << "model,variant,metric,param1,param2,value,stderr\n";
  for (const auto& rec : r.records)
    os << rec.model << "," << rec.variant << "," << rec.metric << "," << fmt17(rec.param1) << ","
       << fmt17(rec.param2) << "," << fmt17(rec.value) << "," << fmt17(rec.stderr_boot) << "\n";
}

void write_error_report_json(std::ostream& os, const ErrorReport& r, const MetaList& meta) {
  nlohmann::json j;
  j["tool"] = "vndiff 0.1.0";
  for (const auto& [k, v] : meta) j["config"][k] = v;
  j["records"] = nlohmann::json::array();
  for (const auto& rec : r.records) {
    nlohmann::json o;
    o["model"] = rec.model;
    o["variant"] = rec.variant;
    o["metric"] = rec.metric;
    o["param1"] = rec.param1;
    o["param2"] = rec.param2;
    o["value"] = rec.value;
    o["stderr"] = rec.stderr_boot;
    j["records"].push_back(o);
  }
  os << j.dump(2) << "\n";
}

void write_md_report_csv(std::ostream& os, const MdReport& r, const MetaList& meta) {
  write_meta(os, meta);
  os << "R,z,side,variant,raw_error,envelope,normalized\n";
  for (const auto& p : r.points)
    os << fmt17(p.R) << "," << fmt17(p.z) << ","
       << (p.side == TailSide::Right ? "right" : "left") << ","
       << (p.variant == PoissonVariant::V0 ? "v0" : "v1") << "," << fmt17(p.raw_error) << ","
       << fmt17(p.envelope) << "," << fmt17(p.normalized) << "\n";
}

}  // namespace vndiff
