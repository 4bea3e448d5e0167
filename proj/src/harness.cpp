#include "packdim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "packdim/envelope.hpp"
#include "packdim/error.hpp"
#include "packdim/fbm.hpp"
#include "packdim/projection.hpp"
#include "packdim/text.hpp"

namespace packdim {

namespace {

using Json = nlohmann::ordered_json;

const std::vector<KeyInfo> kKeys = {
    {"seed", "1", "master seed; PACKDIM_SEED overrides the config file"},
    {"measure", "cantor:ratio=1/3,depth=11", "measure file or generator spec"},
    {"out", ".", "output directory"},
    {"file", "measure.txt", "measure file name written by generate"},
    {"serial", "false", "force single-threaded execution"},
    {"threads", "0", "worker threads, 0 = hardware concurrency"},
    {"est.r_lo", "0.000244140625", "smallest radius of the estimator window"},
    {"est.r_hi", "0.125", "largest radius of the estimator window"},
    {"est.ratio", "0.8408964152537145", "radius grid ratio"},
    {"est.quantile", "0.05", "essential-infimum quantile q"},
    {"est.t_step", "0.02", "profile t-scan step"},
    {"est.slack", "0.05", "slack tolerance tau"},
    {"est.span", "8", "slope sub-window width in octaves"},
    {"est.refs", "256", "reference samples, 0 = every atom"},
    {"img.r_lo", "", "window for projected or image measures (empty = est.r_lo)"},
    {"img.r_hi", "", "window for projected or image measures (empty = est.r_hi)"},
    {"img.span", "", "slope span for projected or image measures (empty = est.span)"},
    {"m", "1", "profile indices (comma list); verify uses the first"},
    {"thetas", "1,0.5,0.25,0.125,0.0625", "decreasing theta list for the critical point"},
    {"s_grid", "", "profile curve indices (comma list, empty = no curve)"},
    {"curve_theta", "1", "theta of the profile curve"},
    {"critical", "true", "estimate the critical point"},
    {"assouad.coarse", "4", "largest coarse dyadic level"},
    {"assouad.fine", "10", "largest fine dyadic level (clamped to the atom resolution)"},
    {"assouad.gap", "2", "smallest level gap"},
    {"experiment", "projection", "verify: projection, fbm or all"},
    {"frames", "20", "projection frames"},
    {"alpha", "0.5", "fBm Hurst index"},
    {"d", "2", "fBm target dimension"},
    {"trials", "8", "fBm trials"},
    {"grid", "0", "fBm grid size, 0 = chosen from the atom gaps"},
    {"ensemble", "0", "fBm increment-scaling ensemble size, 0 = skip"},
    {"ensemble_grid", "1024", "grid of the increment-scaling ensemble"},
    {"env.C", "1", "envelope constant C"},
    {"env.t", "0.6309297535714574", "envelope exponent t"},
    {"env.base", "3", "envelope base b"},
    {"env.depth", "8", "envelope depth"},
    {"env.r_lo", "", "regularity window (empty = b^-(depth-2))"},
    {"env.r_hi", "", "regularity window (empty = 1/b)"},
    {"env.samples", "200", "regularity samples"},
    {"growth.s", "", "growth lemma exponent (empty = Assouad estimate)"},
    {"growth.eps", "0.1", "growth lemma epsilon"},
    {"growth.a", "0.5", "growth lemma a"},
    {"growth.centres", "100", "growth lemma centres"},
    {"growth.pairs", "100", "growth lemma (rho, r) pairs per centre"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Json estimate_json(const DimensionEstimate& e) {
  Json j;
  j["method"] = e.method;
  j["value"] = e.value;
  j["half_width"] = e.half_width;
  j["r_lo"] = e.r_lo;
  j["r_hi"] = e.r_hi;
  j["quantile"] = e.quantile;
  j["seed"] = e.seed;
  j["samples"] = e.samples;
  j["saturated"] = e.saturated;
  return j;
}

Json verdict_json(const Verdict& v) {
  Json j;
  j["theorem"] = v.id;
  j["statement"] = v.statement;
  j["lhs"] = v.lhs;
  j["rhs"] = v.rhs;
  j["tolerance"] = v.tolerance;
  j["verdict"] = v.pass ? "pass" : "fail";
  return j;
}

Json critical_json(const CriticalPoint& cp) {
  Json j;
  j["value"] = estimate_json(cp.value);
  j["fit_intercept"] = cp.fit_intercept;
  j["fit_slope"] = cp.fit_slope;
  j["worst_increase"] = cp.worst_increase;
  Json rows = Json::array();
  for (std::size_t i = 0; i < cp.theta.size(); ++i) {
    rows.push_back(Json{{"theta", cp.theta[i]}, {"value", cp.per_theta[i].value}});
  }
  j["per_theta"] = rows;
  return j;
}

std::string critical_table(const CriticalPoint& cp) {
  std::string out = "theta\tvalue\n";
  for (std::size_t i = 0; i < cp.theta.size(); ++i) {
    out += format_double(cp.theta[i]) + '\t' + format_double(cp.per_theta[i].value) + '\n';
  }
  return out;
}

Exec exec_for(const RunConfig& cfg) {
  if (cfg.flag("serial")) return Exec::serial();
  return Exec{true, static_cast<unsigned>(cfg.integer("threads"))};
}

bool single_atom(const PointMeasure& mu) { return mu.size() == 1; }

DimensionEstimate zero_estimate(const std::string& method) {
  DimensionEstimate e;
  e.method = method;
  return e;
}

CommandOutput cmd_generate(const RunConfig& cfg) {
  PointMeasure mu = generate_measure(cfg.text("measure"));
  CommandOutput out;
  Json r;
  r["spec"] = cfg.text("measure");
  r["file"] = cfg.text("file");
  r["ambient_dim"] = mu.ambient_dim();
  r["atoms"] = mu.size();
  Json meta = Json::object();
  for (const auto& [k, v] : mu.meta()) meta[k] = v;
  r["meta"] = meta;
  out.report = r;
  out.measure = std::move(mu);
  return out;
}

CommandOutput cmd_estimate(const RunConfig& cfg) {
  const PointMeasure mu = resolve_measure(cfg.text("measure"));
  const EstimatorConfig est = cfg.estimator();
  CommandOutput out;
  Json r;
  r["ambient_dim"] = mu.ambient_dim();
  r["atoms"] = mu.size();
  // a single atom has every dimension 0; the slope estimators have nothing to fit
  const bool dirac = single_atom(mu);
  r["dim_H"] = estimate_json(dirac ? zero_estimate("dim_H_ball") : dim_H_ball(mu, est));
  r["dim_P"] = estimate_json(dirac ? zero_estimate("dim_P_ball") : dim_P_ball(mu, est));
  const auto pairs = cfg.assouad_pairs(mu);
  r["dim_A"] = estimate_json(pairs.empty() ? zero_estimate("assouad_dim") : assouad_dim(mu, pairs));
  Json profiles = Json::array();
  for (double m : cfg.reals("m")) {
    if (!(m >= 1.0 && m <= static_cast<double>(mu.ambient_dim()) && m == std::floor(m))) {
      throw ParameterError("profile index m must be an integer in [1, n]");
    }
    profiles.push_back(Json{{"m", m}, {"estimate", estimate_json(packing_profile(mu, m, est))}});
  }
  r["packing_profile"] = profiles;
  const auto s_grid = cfg.reals("s_grid");
  if (!s_grid.empty()) {
    if (dirac) throw ParameterError("a profile curve needs more than one atom");
    const auto curve = profile_curve(mu, cfg.real("curve_theta"), s_grid, est);
    Json c;
    c["theta"] = curve.theta;
    c["max_slope"] = curve.max_slope;
    c["self_improving_excess"] = curve.self_improving_excess;
    c["swapped_excess"] = curve.swapped_excess;
    Json pts = Json::array();
    std::string table = "s\tvalue\tsaturated\n";
    for (std::size_t i = 0; i < curve.s.size(); ++i) {
      pts.push_back(Json{{"s", curve.s[i]}, {"value", curve.f[i].value}});
      table += format_double(curve.s[i]) + '\t' + format_double(curve.f[i].value) + '\t' +
               (curve.f[i].saturated ? "1" : "0") + '\n';
    }
    c["points"] = pts;
    r["profile_curve"] = c;
    out.files.emplace_back("profile_curve.tsv", table);
  }
  if (cfg.flag("critical")) {
    CriticalPoint cp;
    cp.value = zero_estimate("critical_point");
    if (!dirac) cp = critical_point(mu, cfg.reals("thetas"), est);
    r["critical_point"] = critical_json(cp);
    out.files.emplace_back("critical_theta.tsv", critical_table(cp));
  }
  out.report = r;
  return out;
}

Json projection_json(const ProjectionReport& p, std::string& table) {
  Json j;
  j["n"] = p.n;
  j["m"] = p.m;
  Json rows = Json::array();
  table = "frame\tseed\tdigest\tdim_P\n";
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto& row = p.rows[i];
    rows.push_back(Json{{"seed", row.seed}, {"frame", row.frame_digest}, {"dim_P", row.dim_p}});
    table += std::to_string(i) + '\t' + std::to_string(row.seed) + '\t' + row.frame_digest + '\t' +
             format_double(row.dim_p) + '\n';
  }
  j["frames"] = rows;
  j["median"] = p.median;
  j["spread"] = p.spread;
  j["packing_profile"] = estimate_json(p.packing_profile);
  j["dim_P"] = estimate_json(p.dim_p);
  j["dim_H"] = estimate_json(p.dim_h);
  if (p.assouad) j["dim_A"] = estimate_json(*p.assouad);
  if (p.critical) j["critical_point"] = critical_json(*p.critical);
  j["falconer_mattila_bound"] = p.fm_bound;
  Json verdicts = Json::array();
  for (const auto& v : p.verdicts) verdicts.push_back(verdict_json(v));
  j["verdicts"] = verdicts;
  return j;
}

Json fbm_json(const FbmReport& f, std::string& table) {
  Json j;
  j["alpha"] = f.alpha;
  j["d"] = f.channels;
  j["grid"] = f.grid;
  Json rows = Json::array();
  table = "trial\tseed\tmax_snap\tdim_P\n";
  for (std::size_t i = 0; i < f.rows.size(); ++i) {
    const auto& row = f.rows[i];
    rows.push_back(Json{{"seed", row.seed}, {"max_snap", row.max_snap}, {"dim_P", row.dim_p}});
    table += std::to_string(i) + '\t' + std::to_string(row.seed) + '\t' + format_double(row.max_snap) + '\t' +
             format_double(row.dim_p) + '\n';
  }
  j["trials"] = rows;
  j["median"] = f.median;
  j["spread"] = f.spread;
  j["profile"] = estimate_json(f.profile);
  j["dim_P"] = estimate_json(f.dim_p);
  if (f.assouad) j["dim_A"] = estimate_json(*f.assouad);
  if (f.critical) j["critical_point"] = critical_json(*f.critical);
  Json verdicts = Json::array();
  for (const auto& v : f.verdicts) verdicts.push_back(verdict_json(v));
  j["verdicts"] = verdicts;
  return j;
}

FbmConfig fbm_config(const RunConfig& cfg, const PointMeasure& mu) {
  FbmConfig f;
  f.alpha = cfg.real("alpha");
  f.channels = cfg.integer("d");
  f.trials = cfg.integer("trials");
  f.grid = cfg.integer("grid");
  f.seed = cfg.seed();
  f.measure_cfg = cfg.estimator();
  f.image_cfg = cfg.estimator("img");
  f.assouad_pairs = cfg.assouad_pairs(mu);
  f.thetas = cfg.reals("thetas");
  f.critical = cfg.flag("critical");
  return f;
}

CommandOutput cmd_verify(const RunConfig& cfg) {
  const PointMeasure mu = resolve_measure(cfg.text("measure"));
  const auto ms = cfg.reals("m");
  if (ms.empty()) throw ParameterError("verify needs m");
  const double m = ms.front();
  const auto n = static_cast<double>(mu.ambient_dim());
  if (!(m >= 1.0 && m <= n && m == std::floor(m))) {
    throw ParameterError("projection dimension m must be an integer in [1, " + std::to_string(mu.ambient_dim()) + "]");
  }
  const std::string experiment = cfg.text("experiment");
  if (experiment != "projection" && experiment != "fbm" && experiment != "all") {
    throw ParameterError("experiment must be projection, fbm or all");
  }
  // fail before the projection half runs
  if (experiment != "projection" && mu.ambient_dim() != 1) {
    throw ParameterError("the fBm experiment needs a measure on [0,1]");
  }
  CommandOutput out;
  Json r;
  Json verdicts = Json::array();
  if (experiment != "fbm") {
    ProjectionConfig p;
    p.m = static_cast<std::size_t>(m);
    p.frames = cfg.integer("frames");
    p.seed = cfg.seed();
    p.measure_cfg = cfg.estimator();
    p.projected_cfg = cfg.estimator("img");
    p.assouad_pairs = cfg.assouad_pairs(mu);
    p.thetas = cfg.reals("thetas");
    p.critical = cfg.flag("critical");
    const auto report = projection_experiment(mu, p);
    std::string table;
    r["projection"] = projection_json(report, table);
    out.files.emplace_back("projection_frames.tsv", table);
    for (const auto& v : report.verdicts) verdicts.push_back(verdict_json(v));
    if (report.critical && report.assouad) {
      // Lower bound for the theta profile in terms of dim_A and dim_P.
      for (std::size_t i = 0; i < report.critical->theta.size(); ++i) {
        const double th = report.critical->theta[i];
        const double bound = assouad_profile_bound(report.assouad->value, report.dim_p.value, th);
        const double got = report.critical->per_theta[i].value;
        verdicts.push_back(verdict_json(Verdict{"assouad-lower(theta=" + format_double(th) + ")",
                                                "dim^n_{P,theta} mu >= dim_A - (dim_A - dim_P)/theta", got, bound,
                                                0.1, got >= bound - 0.1}));
      }
    }
    Json bounds;
    bounds["falconer_mattila"] = report.fm_bound;
    if (report.critical) {
      bounds["exceptional_full"] = exceptional_dim_bound(static_cast<int>(n), static_cast<int>(m),
                                                         report.critical->value.value, ExceptionalTarget::full);
    }
    if (report.assouad) {
      bounds["exceptional_preserve"] = exceptional_dim_bound(static_cast<int>(n), static_cast<int>(m),
                                                             report.assouad->value, ExceptionalTarget::preserve);
    }
    r["bounds"] = bounds;
  }
  if (experiment != "projection") {
    const auto report = fbm_experiment(mu, fbm_config(cfg, mu));
    std::string table;
    r["fbm"] = fbm_json(report, table);
    out.files.emplace_back("fbm_trials.tsv", table);
    for (const auto& v : report.verdicts) verdicts.push_back(verdict_json(v));
  }
  r["verdicts"] = verdicts;
  out.report = r;
  return out;
}

CommandOutput cmd_envelope(const RunConfig& cfg) {
  const PointMeasure mu = resolve_measure(cfg.text("measure"));
  const auto base = cfg.integer("env.base");
  const int depth = static_cast<int>(cfg.integer("env.depth"));
  const Envelope env = build_envelope(mu, cfg.real("env.C"), cfg.real("env.t"), base, depth);
  CommandOutput out;
  Json r;
  r["M"] = env.tree->branching();
  r["base"] = base;
  r["depth"] = depth;
  r["achieved_exponent"] = env.achieved_exponent();
  r["padded_cubes"] = env.padded;
  r["contains_E"] = envelope_contains(*env.tree, mu);
  const std::string defect = tree_defect(*env.tree);
  r["tree_ok"] = defect.empty();
  if (!defect.empty()) r["tree_defect"] = defect;
  Json levels = Json::array();
  for (int m = 0; m <= depth; ++m) levels.push_back(env.tree->count(m));
  r["cubes_per_level"] = levels;

  const double b = static_cast<double>(base);
  const double r_lo = cfg.text("env.r_lo").empty() ? std::pow(b, -(depth - 2)) : cfg.real("env.r_lo");
  const double r_hi = cfg.text("env.r_hi").empty() ? 1.0 / b : cfg.real("env.r_hi");
  if (depth >= 3 || !cfg.text("env.r_lo").empty()) {
    const auto reg = verify_regularity(env.measure, r_lo, r_hi, cfg.integer("env.samples"), cfg.seed());
    r["regularity"] = Json{{"expected", reg.expected}, {"exponent", reg.exponent}, {"log_spread", reg.log_spread},
                           {"r_lo", reg.r_lo},         {"r_hi", reg.r_hi},         {"samples", reg.samples},
                           {"verdict", std::abs(reg.exponent - reg.expected) <= 0.1 ? "pass" : "fail"}};
  }

  GrowthParams g;
  if (cfg.text("growth.s").empty()) {
    const auto pairs = cfg.assouad_pairs(mu);
    g.s = pairs.empty() ? 0.0 : assouad_dim(mu, pairs).value;
  } else {
    g.s = cfg.real("growth.s");
  }
  g.epsilon = cfg.real("growth.eps");
  g.a = cfg.real("growth.a");
  g.centres = cfg.integer("growth.centres");
  g.pairs_per_centre = cfg.integer("growth.pairs");
  g.seed = cfg.seed();
  const auto growth = growth_check(mu, g, exec_for(cfg));
  r["growth"] = Json{{"s", g.s},
                     {"epsilon", g.epsilon},
                     {"a", g.a},
                     {"triples", growth.triples},
                     {"violations", growth.violations},
                     {"violation_fraction", growth.violation_fraction()},
                     {"worst_ratio", growth.worst_ratio},
                     {"verdict", growth.violation_fraction() <= 0.05 ? "pass" : "fail"}};
  out.report = r;
  out.tree = *env.tree;
  return out;
}

CommandOutput cmd_fbm(const RunConfig& cfg) {
  const PointMeasure mu = resolve_measure(cfg.text("measure"));
  if (mu.ambient_dim() != 1) throw ParameterError("the fBm experiment needs a measure on [0,1]");
  const auto report = fbm_experiment(mu, fbm_config(cfg, mu));
  CommandOutput out;
  std::string table;
  Json r = fbm_json(report, table);
  out.files.emplace_back("fbm_trials.tsv", table);
  if (const auto fields = cfg.integer("ensemble"); fields > 0) {
    const auto sc = increment_scaling(cfg.real("alpha"), cfg.integer("ensemble_grid"), cfg.integer("d"), fields,
                                      cfg.seed(), exec_for(cfg));
    Json lags = Json::array();
    std::string scaling = "lag\tvariance\n";
    for (std::size_t i = 0; i < sc.lags.size(); ++i) {
      lags.push_back(Json{{"lag", sc.lags[i]}, {"variance", sc.variances[i]}});
      scaling += format_double(sc.lags[i]) + '\t' + format_double(sc.variances[i]) + '\n';
    }
    r["increment_scaling"] = Json{{"fields", fields},
                                  {"exponent", sc.exponent},
                                  {"expected", 2.0 * cfg.real("alpha")},
                                  {"var_at_one", sc.var_at_one},
                                  {"lags", lags}};
    out.files.emplace_back("increment_scaling.tsv", scaling);
  }
  out.report = r;
  return out;
}

}  // namespace

const std::vector<KeyInfo>& config_keys() { return kKeys; }

RunConfig::RunConfig(std::string command) : command_(std::move(command)) {
  for (const auto& k : kKeys) values_[k.key] = k.fallback;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ParameterError("unknown configuration key '" + key + "'");
  it->second = value;
}

void RunConfig::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ParameterError("expected key=value, got '" + assignment + "'");
  set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config file " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      assign(line);
    } catch (const ParameterError& e) {
      throw ParameterError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

std::string RunConfig::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ParameterError("unknown configuration key '" + key + "'");
  return it->second;
}

double RunConfig::real(const std::string& key) const {
  const std::string v = text(key);
  try {
    return parse_ratio(v);
  } catch (const ParameterError&) {
    throw ParameterError("key " + key + " needs a number, got '" + v + "'");
  }
}

std::uint64_t RunConfig::integer(const std::string& key) const {
  const std::string v = text(key);
  std::size_t out = 0;
  if (!parse_size(v, out)) throw ParameterError("key " + key + " needs a non-negative integer, got '" + v + "'");
  return out;
}

bool RunConfig::flag(const std::string& key) const {
  const std::string v = text(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParameterError("key " + key + " needs true or false, got '" + v + "'");
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  const std::string v = text(key);
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) {
    try {
      out.push_back(parse_ratio(part));
    } catch (const ParameterError&) {
      throw ParameterError("key " + key + " needs a comma list of numbers, got '" + v + "'");
    }
  }
  return out;
}

std::string RunConfig::digest() const {
  std::string text = "command=" + command_ + '\n';
  for (const auto& [k, v] : values_) text += k + '=' + v + '\n';
  return fnv1a_hex(text);
}

EstimatorConfig RunConfig::estimator(const std::string& prefix) const {
  auto pick = [&](const std::string& field) {
    const std::string own = prefix + "." + field;
    if (prefix != "est" && values_.count(own) != 0 && !text(own).empty()) return real(own);
    return real("est." + field);
  };
  EstimatorConfig e;
  e.r_lo = pick("r_lo");
  e.r_hi = pick("r_hi");
  e.ratio = real("est.ratio");
  e.quantile = real("est.quantile");
  e.t_step = real("est.t_step");
  e.slack = real("est.slack");
  e.slope_span = pick("span");
  e.ref_samples = integer("est.refs");
  e.seed = seed();
  e.exec = exec_for(*this);
  e.validate();
  return e;
}

LevelPairs RunConfig::assouad_pairs(const PointMeasure& mu) const {
  if (mu.size() == 1) return {{0, 2}};
  const int gap = static_cast<int>(std::max<std::uint64_t>(1, integer("assouad.gap")));
  const int fine = std::min(static_cast<int>(integer("assouad.fine")), resolution_level(mu));
  const int coarse = std::min(static_cast<int>(integer("assouad.coarse")), fine - gap);
  if (coarse < 0) return {};
  return make_level_pairs(coarse, fine, gap);
}

PointMeasure generate_measure(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = trim(spec.substr(0, colon));
  const std::string rest = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  if (kind == "product") {
    const auto bar = rest.find('|');
    if (bar == std::string::npos) throw ParameterError("product spec needs 'product:<spec>|<spec>'");
    return make_product_measure(generate_measure(rest.substr(0, bar)), generate_measure(rest.substr(bar + 1)));
  }
  std::map<std::string, std::string> params;
  std::vector<double> point;
  if (!trim(rest).empty()) {
    for (const auto& item : split(rest, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ParameterError("generator parameter '" + item + "' needs key=value");
      const std::string key = trim(std::string_view(item).substr(0, eq));
      const std::string value = trim(std::string_view(item).substr(eq + 1));
      if (key == "x") {
        point.push_back(parse_ratio(value));
      } else {
        params[key] = value;
      }
    }
  }
  auto take = [&](const std::string& key, const std::string& fallback) {
    auto it = params.find(key);
    std::string v = it == params.end() ? fallback : it->second;
    if (it != params.end()) params.erase(it);
    return v;
  };
  auto as_int = [](const std::string& v) {
    std::size_t out = 0;
    if (!parse_size(v, out)) throw ParameterError("expected a non-negative integer, got '" + v + "'");
    return out;
  };
  auto finish = [&](PointMeasure mu) {
    if (!params.empty()) throw ParameterError("unknown generator parameter '" + params.begin()->first + "'");
    return mu;
  };
  if (kind == "cantor") {
    const double ratio = parse_ratio(take("ratio", "1/3"));
    const auto depth = as_int(take("depth", "11"));
    return finish(make_ifs_measure(IfsSystem::cantor(ratio), static_cast<int>(depth)));
  }
  if (kind == "grid") {
    const auto n = as_int(take("n", "1"));
    const auto k = as_int(take("k", "4096"));
    return finish(make_grid_measure(n, k));
  }
  if (kind == "sparse") {
    const double h = parse_ratio(take("h", "0.3"));
    const double p = parse_ratio(take("p", "0.6"));
    const auto depth = as_int(take("depth", "12"));
    const auto seed = as_int(take("seed", "1"));
    return finish(make_sparse_scale_measure(h, p, static_cast<int>(depth), seed));
  }
  if (kind == "atom") {
    if (point.empty()) point.push_back(0.5);
    return finish(make_dirac(point));
  }
  throw ParameterError("unknown generator '" + kind + "' (expected cantor, grid, sparse, atom or product)");
}

PointMeasure resolve_measure(const std::string& source) {
  if (std::filesystem::exists(source)) return load_measure(source);
  if (source.find(':') != std::string::npos || source == "atom") return generate_measure(source);
  throw FormatError("measure file not found: " + source);
}

CommandOutput run_command(const RunConfig& cfg) {
  CommandOutput out;
  const std::string& c = cfg.command();
  if (c == "generate") {
    out = cmd_generate(cfg);
  } else if (c == "estimate") {
    out = cmd_estimate(cfg);
  } else if (c == "verify") {
    out = cmd_verify(cfg);
  } else if (c == "envelope") {
    out = cmd_envelope(cfg);
  } else if (c == "fbm") {
    out = cmd_fbm(cfg);
  } else {
    throw ParameterError("unknown command '" + c + "'");
  }
  Json wrapped;
  wrapped["tool"] = "packdim";
  wrapped["version"] = kToolVersion;
  wrapped["command"] = c;
  wrapped["seed"] = cfg.seed();
  wrapped["config_digest"] = cfg.digest();
  Json config = Json::object();
  for (const auto& [k, v] : cfg.values()) config[k] = v;
  wrapped["config"] = config;
  wrapped["result"] = std::move(out.report);
  out.report = std::move(wrapped);
  const std::string stamp = "# packdim " + std::string(kToolVersion) + " seed=" + std::to_string(cfg.seed()) +
                            " config=" + cfg.digest() + '\n';
  for (auto& [name, content] : out.files) content.insert(0, stamp);
  return out;
}

std::string render_report(const CommandOutput& out) { return out.report.dump(2) + '\n'; }

std::filesystem::path write_outputs(const RunConfig& cfg, const CommandOutput& out) {
  const std::filesystem::path dir = cfg.text("out");
  std::filesystem::create_directories(dir);
  auto write = [&](const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw FormatError("cannot write " + p.string());
    f << content;
  };
  const std::string stamp = "# packdim " + std::string(kToolVersion) + " seed=" + std::to_string(cfg.seed()) +
                            " config=" + cfg.digest() + '\n';
  auto stamped = [&](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream body;
    body << in.rdbuf();
    in.close();
    write(p, stamp + body.str());
  };
  if (out.measure) {
    const auto path = dir / cfg.text("file");
    save_measure(*out.measure, path);
    stamped(path);
    Json meta;
    meta["tool"] = "packdim";
    meta["version"] = kToolVersion;
    meta["seed"] = std::to_string(cfg.seed());
    meta["config_digest"] = cfg.digest();
    for (const auto& [k, v] : out.measure->meta()) meta[k] = v;
    write(meta_path(path), meta.dump(2) + '\n');
  }
  if (out.tree) {
    save_tree(*out.tree, dir / "envelope_tree.txt");
    stamped(dir / "envelope_tree.txt");
  }
  for (const auto& [name, content] : out.files) write(dir / name, content);
  const auto report = dir / (cfg.command() + ".json");
  write(report, render_report(out));
  return report;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e) != nullptr || dynamic_cast<const CapacityError*>(&e) != nullptr ||
      dynamic_cast<const FormatError*>(&e) != nullptr) {
    return 2;
  }
  return 3;
}

}  // namespace packdim
