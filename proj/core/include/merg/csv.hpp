#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "merg/laplace.hpp"
#include "merg/report.hpp"

namespace merg {

// Shortest representation that round-trips a double (17 significant digits).
std::string format_double(double v, int precision = 17);

std::uint64_t fnv1a64(std::string_view data);

// Two comment lines: tool version (excluded from byte-identity checks) and
// the deterministic run identity (config hash + seed).
void write_csv_preamble(std::ostream& os, std::uint64_t config_hash, std::uint64_t seed);

void write_laplace_csv(std::ostream& os, const std::vector<LaplaceEstimate>& rows,
                       int precision = 17);

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& rows, int precision = 17);

void write_report_csv(std::ostream& os, const ErgodicityReport& report, int precision = 17);

void write_report_summary_csv(std::ostream& os, const ErgodicityReport& report,
                              int precision = 17);

void write_counterexample_csv(std::ostream& os, const std::vector<CounterexampleRow>& rows,
                              int precision = 17);

}  // namespace merg
