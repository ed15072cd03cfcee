#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "vndiff/density.hpp"
#include "vndiff/metrics.hpp"
#include "vndiff/models.hpp"
#include "vndiff/stein.hpp"

namespace vndiff {

// 17 significant digits, '.' decimal point, locale-independent.
std::string fmt17(double v);

using MetaList = std::vector<std::pair<std::string, std::string>>;

// '#'-prefixed header comment lines (tool version + parameter echo).
void write_meta(std::ostream& os, const MetaList& meta);

void write_reference_csv(std::ostream& os, const LatticeDistribution& d, const MetaList& meta);
void write_density_csv(std::ostream& os, const StationaryDensity& d, const MetaList& meta,
                       std::size_t max_rows = 2000);
void write_coefficient_csv(std::ostream& os, const CoefficientFn& v, double lo, double hi,
                           std::size_t points, const MetaList& meta);
void write_error_report_csv(std::ostream& os, const ErrorReport& r, const MetaList& meta);
void write_error_report_json(std::ostream& os, const ErrorReport& r, const MetaList& meta);
void write_md_report_csv(std::ostream& os, const MdReport& r, const MetaList& meta);

}  // namespace vndiff
