#include "merg/csv.hpp"

#include <cmath>
#include <cstdio>

#include "merg/version.hpp"

namespace merg {

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_csv_preamble(std::ostream& os, std::uint64_t config_hash, std::uint64_t seed) {
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash));
  os << "# merg version=" << version_string << "\n";
  os << "# config=" << hash_hex << " seed=" << seed << "\n";
}

void write_laplace_csv(std::ostream& os, const std::vector<LaplaceEstimate>& rows,
                       int precision) {
  os << "gamma,n,value,std_error,source\n";
  for (const auto& e : rows) {
    os << format_double(e.gamma, precision) << ',' << e.n << ','
       << format_double(e.value, precision) << ',' << format_double(e.std_error, precision)
       << ',' << to_string(e.source) << "\n";
  }
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& rows, int precision) {
  os << "gamma,r,r_prime,sub_modulus,residual,N,X_max\n";
  for (const auto& p : rows) {
    os << format_double(p.gamma, precision) << ',' << format_double(p.r, precision) << ','
       << format_double(p.r_prime, precision) << ',' << format_double(p.sub_modulus, precision)
       << ',' << format_double(p.residual, precision) << ',' << p.grid_n << ','
       << format_double(p.x_max, precision) << "\n";
  }
}

void write_report_csv(std::ostream& os, const ErgodicityReport& report, int precision) {
  os << "gamma,rho,A,r_prime,sub_modulus\n";
  for (const auto& p : report.points) {
    os << format_double(p.gamma, precision) << ',' << format_double(p.rho, precision) << ','
       << format_double(p.amplitude, precision) << ',' << format_double(p.r_prime, precision)
       << ',' << format_double(p.sub_modulus, precision) << "\n";
  }
}

void write_report_summary_csv(std::ostream& os, const ErgodicityReport& report, int precision) {
  os << "key,value\n";
  os << "initial_law," << report.initial_law << "\n";
  switch (report.nu.status) {
    case NuStatus::found:
      os << "nu," << format_double(report.nu.nu, precision) << "\n";
      break;
    case NuStatus::nu_infinite:
      os << "nu,infinite\n";
      break;
    case NuStatus::bad_bracket:
      os << "nu,bracket_invalid\n";
      break;
  }
  os << "r_at_infinity," << format_double(report.nu.r_at_infinity, precision) << "\n";
  if (report.cnu_computed) {
    os << "C_nu_formula," << format_double(report.cnu.formula_value, precision) << "\n";
    if (report.cnu.direct_ok) {
      os << "C_nu_direct," << format_double(report.cnu.direct_value, precision) << "\n";
      os << "C_nu_discrepancy," << format_double(report.cnu.rel_discrepancy, precision) << "\n";
    } else {
      os << "C_nu_direct,unavailable\n";
    }
  }
  os << "fit_M," << format_double(report.fit_M, precision) << "\n";
  os << "fit_theta," << format_double(report.fit_theta, precision) << "\n";
  os << "fit_spectral_fallback," << (report.fit_spectral_fallback ? "true" : "false") << "\n";
  os << "max_route_gap," << format_double(report.max_route_gap, precision) << "\n";
  for (const auto& w : report.warnings) {
    os << "warning," << w << "\n";
  }
}

void write_counterexample_csv(std::ostream& os, const std::vector<CounterexampleRow>& rows,
                              int precision) {
  os << "gamma,n,beta,far_point,lower_bound,mc_estimate\n";
  for (const auto& r : rows) {
    os << format_double(r.gamma, precision) << ',' << r.n << ','
       << format_double(r.beta, precision) << ',' << format_double(r.far_point, precision)
       << ',' << format_double(r.lower_bound, precision) << ','
       << format_double(r.mc_estimate, precision) << "\n";
  }
}

}  // namespace merg
