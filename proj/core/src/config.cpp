#include "merg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "merg/csv.hpp"

namespace merg {

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct RawEntry {
  std::string value;
  int line = 0;
  bool consumed = false;
};

class ConfigReader {
 public:
  explicit ConfigReader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string t = strip(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        issues.push_back({lineno, "", "expected 'key = value'"});
        continue;
      }
      const std::string key = strip(t.substr(0, eq));
      const std::string value = strip(t.substr(eq + 1));
      if (key.empty()) {
        issues.push_back({lineno, "", "empty key"});
        continue;
      }
      if (entries.count(key)) {
        issues.push_back({lineno, key, "duplicate key (first on line " +
                                           std::to_string(entries[key].line) + ")"});
        continue;
      }
      entries[key] = RawEntry{value, lineno, false};
    }
  }

  bool has(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return false;
    it->second.consumed = true;
    return true;
  }

  std::optional<std::string> get(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    it->second.consumed = true;
    return it->second.value;
  }

  int line_of(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? 0 : it->second.line;
  }

  void error(const std::string& key, const std::string& msg) {
    issues.push_back({line_of(key), key, msg});
  }

  double number(const std::string& key, double fallback) {
    const auto raw = get(key);
    if (!raw) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(*raw, &used);
      if (used != raw->size()) throw std::invalid_argument(*raw);
      return v;
    } catch (const std::exception&) {
      error(key, "malformed number '" + *raw + "'");
      return fallback;
    }
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const auto raw = get(key);
    if (!raw) return fallback;
    try {
      std::size_t used = 0;
      const std::int64_t v = std::stoll(*raw, &used);
      if (used != raw->size()) throw std::invalid_argument(*raw);
      return v;
    } catch (const std::exception&) {
      error(key, "malformed integer '" + *raw + "'");
      return fallback;
    }
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto raw = get(key);
    if (!raw) return fallback;
    if (*raw == "true" || *raw == "1") return true;
    if (*raw == "false" || *raw == "0") return false;
    error(key, "expected true/false");
    return fallback;
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    const auto raw = get(key);
    if (!raw) return out;
    std::istringstream in(*raw);
    std::string tok;
    while (in >> tok) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        error(key, "malformed number '" + tok + "' in list");
        return {};
      }
    }
    return out;
  }

  // Whitespace-separated rows delimited by ';'.
  std::optional<Eigen::MatrixXd> matrix(const std::string& key) {
    const auto raw = get(key);
    if (!raw) return std::nullopt;
    std::vector<std::vector<double>> rows;
    std::istringstream in(*raw);
    std::string row_text;
    while (std::getline(in, row_text, ';')) {
      std::istringstream rin(row_text);
      std::vector<double> row;
      std::string tok;
      while (rin >> tok) {
        try {
          std::size_t used = 0;
          row.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          error(key, "malformed matrix entry '" + tok + "'");
          return std::nullopt;
        }
      }
      if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) {
      error(key, "empty matrix");
      return std::nullopt;
    }
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != cols) {
        error(key, "ragged matrix rows");
        return std::nullopt;
      }
    }
    Eigen::MatrixXd m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  void reject_unknown() {
    for (const auto& [key, entry] : entries) {
      if (!entry.consumed) {
        issues.push_back({entry.line, key, "unknown key"});
      }
    }
  }

  std::vector<ConfigIssue> issues;

 private:
  std::map<std::string, RawEntry> entries;
};

std::optional<NoiseSpec> parse_noise(ConfigReader& r, const std::string& prefix) {
  const auto family = r.get(prefix);
  if (!family) {
    r.issues.push_back({0, prefix, "missing noise family"});
    return std::nullopt;
  }
  try {
    if (*family == "gaussian") {
      return NoiseSpec::gaussian(r.number(prefix + ".sigma", 1.0));
    }
    if (*family == "laplace") {
      return NoiseSpec::laplace(r.number(prefix + ".scale", 1.0));
    }
    if (*family == "student") {
      return NoiseSpec::student(r.number(prefix + ".df", 3.0), r.number(prefix + ".scale", 1.0));
    }
  } catch (const std::exception& e) {
    r.error(prefix, e.what());
    return std::nullopt;
  }
  r.error(prefix, "unknown noise family '" + *family + "' (gaussian|laplace|student)");
  return std::nullopt;
}

std::optional<DistributionSpec> parse_distribution(ConfigReader& r, const std::string& prefix) {
  const auto family = r.get(prefix);
  if (!family) {
    r.issues.push_back({0, prefix, "missing distribution family"});
    return std::nullopt;
  }
  try {
    if (*family == "exponential") {
      return DistributionSpec::exponential(r.number(prefix + ".rate", 1.0));
    }
    if (*family == "gaussian") {
      return DistributionSpec::gaussian(r.number(prefix + ".sigma", 1.0));
    }
    if (*family == "uniform") {
      return DistributionSpec::uniform(r.number(prefix + ".a", 0.0), r.number(prefix + ".b", 1.0));
    }
  } catch (const std::exception& e) {
    r.error(prefix, e.what());
    return std::nullopt;
  }
  r.error(prefix, "unknown distribution '" + *family + "' (exponential|gaussian|uniform)");
  return std::nullopt;
}

std::optional<Observable> parse_observable(ConfigReader& r) {
  const auto kind = r.get("observable.kind");
  if (!kind) {
    r.issues.push_back({0, "observable.kind", "missing observable"});
    return std::nullopt;
  }
  std::optional<Observable> obs;
  try {
    if (*kind == "power") {
      obs = Observable::power(r.number("observable.q", 1.0), r.number("observable.scale", 1.0));
    } else if (*kind == "quadratic") {
      obs = Observable::quadratic();
    } else if (*kind == "constant") {
      obs = Observable::constant(r.number("observable.c", 1.0));
    } else if (*kind == "exp_decay") {
      obs = Observable::exp_decay();
    } else if (*kind == "expression") {
      const auto text = r.get("observable.expr");
      if (!text) {
        r.error("observable.kind", "expression observable needs observable.expr");
        return std::nullopt;
      }
      try {
        obs = Observable::expression(*text);
      } catch (const ExprParseError& e) {
        std::string caret(e.position, ' ');
        caret += '^';
        r.error("observable.expr",
                std::string(e.what()) + " at position " + std::to_string(e.position) + "\n  " +
                    *text + "\n  " + caret);
        return std::nullopt;
      }
    } else if (*kind == "table") {
      const auto values = r.numbers("observable.values");
      if (values.empty()) {
        r.error("observable.values", "table observable needs a value list");
        return std::nullopt;
      }
      obs = Observable::table(values);
    } else {
      r.error("observable.kind", "unknown kind '" + *kind +
                                     "' (power|quadratic|constant|exp_decay|expression|table)");
      return std::nullopt;
    }
  } catch (const std::exception& e) {
    r.error("observable.kind", e.what());
    return std::nullopt;
  }

  if (r.has("observable.positive_ae")) {
    obs->set_positive_ae(r.boolean("observable.positive_ae", false));
  }
  if (r.has("observable.coercive")) {
    obs->set_coercive(r.boolean("observable.coercive", false));
  }
  if (const auto c = r.get("observable.sup_ratio")) {
    try {
      obs->set_sup_ratio_bound(std::stod(*c));
    } catch (const std::exception&) {
      r.error("observable.sup_ratio", "malformed number");
    }
  }
  obs->set_allow_unbounded(r.boolean("observable.allow_unbounded", false));
  return obs;
}

std::optional<MarkovModel> parse_model(ConfigReader& r, Observable obs) {
  const auto variant = r.get("model.variant");
  if (!variant) {
    r.issues.push_back({0, "model.variant", "missing model.variant"});
    return std::nullopt;
  }
  try {
    if (*variant == "ar1") {
      const double alpha = r.number("model.alpha", 0.5);
      const double r0 = r.number("model.r0", 2.0);
      if (!(std::abs(alpha) < 1.0)) {
        r.error("model.alpha", "alpha must satisfy |alpha| < 1");
        return std::nullopt;
      }
      auto noise = parse_noise(r, "model.noise");
      if (!noise) return std::nullopt;
      // Growth screen: xi must stay below V = (1+|x|)^r0 unless overridden.
      // A growth degree within r0 certifies boundedness even when the sharp
      // constant is not derivable.
      if (!obs.sup_ratio_bound(r0) && !(obs.growth_degree() <= r0) && !obs.allow_unbounded()) {
        r.error("observable.kind",
                "sup xi/V is unbounded for r0 = " + std::to_string(r0) +
                    " (growth degree " + std::to_string(obs.growth_degree()) +
                    "); set observable.allow_unbounded = true to override, or supply "
                    "observable.sup_ratio");
        return std::nullopt;
      }
      return MarkovModel::ar1(alpha, *noise, r0, std::move(obs));
    }
    if (*variant == "knudsen") {
      const double alpha = r.number("model.alpha", 0.7);
      auto pi = parse_distribution(r, "model.pi");
      if (!pi) return std::nullopt;
      const auto ukind = r.get("model.u");
      if (!ukind || *ukind == "resample") {
        return MarkovModel::knudsen(alpha, ResampleU{*pi}, *pi, std::move(obs));
      }
      if (*ukind == "ar1") {
        auto noise = parse_noise(r, "model.u.noise");
        if (!noise) return std::nullopt;
        return MarkovModel::knudsen(alpha, Ar1U{r.number("model.u.alpha", 0.5), *noise}, *pi,
                                    std::move(obs));
      }
      r.error("model.u", "unknown U kernel '" + *ukind + "' (resample|ar1)");
      return std::nullopt;
    }
    if (*variant == "knudsen_finite") {
      const double alpha = r.number("model.alpha", 0.7);
      const auto u = r.matrix("model.transition");
      const auto piv = r.numbers("model.pi.values");
      if (!u || piv.empty()) {
        r.error("model.variant", "knudsen_finite needs model.transition and model.pi.values");
        return std::nullopt;
      }
      Eigen::VectorXd pi = Eigen::Map<const Eigen::VectorXd>(piv.data(),
                                                             static_cast<Eigen::Index>(piv.size()));
      return MarkovModel::knudsen_finite(alpha, *u, pi, std::move(obs));
    }
    if (*variant == "finite") {
      const auto p = r.matrix("model.transition");
      if (!p) {
        r.error("model.variant", "finite model needs model.transition");
        return std::nullopt;
      }
      std::optional<Eigen::VectorXd> stationary;
      if (r.has("model.stationary")) {
        const auto sv = r.numbers("model.stationary");
        stationary = Eigen::Map<const Eigen::VectorXd>(sv.data(),
                                                       static_cast<Eigen::Index>(sv.size()));
      }
      return MarkovModel::finite_state(*p, std::move(obs), stationary);
    }
  } catch (const std::exception& e) {
    r.error("model.variant", e.what());
    return std::nullopt;
  }
  r.error("model.variant",
          "unknown variant '" + *variant + "' (ar1|knudsen|knudsen_finite|finite)");
  return std::nullopt;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues_)
    : std::runtime_error([&issues_] {
        std::string msg = "configuration rejected:";
        for (const auto& i : issues_) {
          msg += "\n  ";
          if (i.line > 0) msg += "line " + std::to_string(i.line) + ": ";
          if (!i.key.empty()) msg += i.key + ": ";
          msg += i.message;
        }
        return msg;
      }()),
      issues(std::move(issues_)) {}

ReportOptions RunConfig::report_options() const {
  ReportOptions o;
  o.grid = grid;
  o.gammas = gammas;
  o.initial = initial;
  o.nu_bracket_lo = nu_bracket_lo;
  o.nu_bracket_hi = nu_bracket_hi;
  o.nu_tol = nu_tol;
  o.lambda = lambda;
  o.fit_horizons = fit_horizons;
  o.mc_trials = trials;
  o.seed = seed;
  o.series_tol = series_tol;
  return o;
}

RunConfig parse_config(const std::string& text) {
  ConfigReader r(text);

  auto obs = parse_observable(r);
  std::optional<MarkovModel> model;
  if (obs) model = parse_model(r, *obs);

  GridSpec grid;
  grid.n = static_cast<int>(r.integer("domain.n", 400));
  if (grid.n < 2) r.error("domain.n", "need at least 2 grid nodes");
  if (r.has("domain.xmax")) {
    const double x = r.number("domain.xmax", 0.0);
    if (!(x > 0.0)) {
      r.error("domain.xmax", "xmax must be > 0");
    } else {
      grid.xmax = x;
    }
  }

  InitialLaw initial = InitialLaw::stationary();
  if (const auto law = r.get("initial.law")) {
    if (*law == "stationary") {
      initial = InitialLaw::stationary();
    } else if (*law == "point") {
      initial = InitialLaw::point(r.number("initial.point", 0.0));
    } else if (*law == "density") {
      auto d = parse_distribution(r, "initial.density");
      if (d) initial = InitialLaw::law(*d);
    } else {
      r.error("initial.law", "unknown initial law (stationary|point|density)");
    }
  }

  RunConfig cfg{*(model ? std::move(model)
                        : std::optional<MarkovModel>(MarkovModel::finite_state(
                              Eigen::MatrixXd::Identity(1, 1), Observable::constant(0.0)))),
                grid, initial};

  cfg.gammas = r.numbers("tilt.gammas");
  if (cfg.gammas.empty() && r.has("tilt.min")) {
    const double lo = r.number("tilt.min", 0.1);
    const double hi = r.number("tilt.max", 4.0);
    const int count = static_cast<int>(r.integer("tilt.count", 9));
    if (!(hi > lo) || count < 1) {
      r.error("tilt.min", "need tilt.min < tilt.max and tilt.count >= 1");
    } else {
      for (int i = 0; i < count; ++i) {
        cfg.gammas.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
      }
    }
  }
  if (cfg.gammas.empty()) cfg.gammas = {0.25, 0.5, 1.0, 2.0, 4.0};
  for (double g : cfg.gammas) {
    if (!(g >= 0.0)) r.error("tilt.gammas", "tilts must be >= 0");
  }

  const auto trials = r.integer("mc.trials", 100000);
  if (trials < 1) r.error("mc.trials", "trials must be >= 1");
  cfg.trials = static_cast<std::uint64_t>(trials);
  cfg.seed = static_cast<std::uint64_t>(r.integer("mc.seed", 1));
  cfg.mc_horizon = static_cast<int>(r.integer("mc.horizon", 10));
  if (cfg.mc_horizon < 0) r.error("mc.horizon", "horizon must be >= 0");

  cfg.nu_bracket_lo = r.number("solve.bracket_lo", 0.01);
  cfg.nu_bracket_hi = r.number("solve.bracket_hi", 8.0);
  cfg.nu_tol = r.number("solve.tol", 1e-8);
  if (!(cfg.nu_bracket_lo >= 0.0 && cfg.nu_bracket_hi > cfg.nu_bracket_lo)) {
    r.error("solve.bracket_lo", "need 0 <= bracket_lo < bracket_hi");
  }
  if (!(cfg.nu_tol > 0.0)) r.error("solve.tol", "tolerance must be > 0");

  cfg.lambda = r.number("report.lambda", 2.0);
  if (!(cfg.lambda >= 0.0)) r.error("report.lambda", "lambda must be >= 0");
  cfg.fit_horizons = static_cast<int>(r.integer("report.horizons", 25));
  if (cfg.fit_horizons < 8) r.error("report.horizons", "need at least 8 horizons");
  cfg.series_tol = r.number("report.series_tol", 1e-6);
  if (!(cfg.series_tol > 0.0)) r.error("report.series_tol", "tolerance must be > 0");

  cfg.ce_step = r.number("counterexample.step", 1.0);
  if (!(cfg.ce_step > 0.0)) r.error("counterexample.step", "step bound must be > 0");
  if (r.has("counterexample.betas")) {
    cfg.ce_betas = r.numbers("counterexample.betas");
    for (double b : cfg.ce_betas) {
      if (!(b > 0.0)) r.error("counterexample.betas", "betas must be > 0");
    }
  }
  if (r.has("counterexample.ns")) {
    cfg.ce_ns.clear();
    for (double v : r.numbers("counterexample.ns")) {
      cfg.ce_ns.push_back(static_cast<int>(v));
      if (v < 0) r.error("counterexample.ns", "horizons must be >= 0");
    }
  }

  cfg.precision = static_cast<int>(r.integer("output.precision", 17));
  if (cfg.precision < 1 || cfg.precision > 17) {
    r.error("output.precision", "precision must be in [1, 17]");
  }

  r.reject_unknown();
  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));

  cfg.config_hash = fnv1a64(text);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace merg
