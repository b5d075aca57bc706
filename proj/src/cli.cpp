#include "betalab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "betalab/density.hpp"
#include "betalab/dynsys.hpp"
#include "betalab/equidistribution.hpp"
#include "betalab/expansions.hpp"
#include "betalab/fiber_measures.hpp"
#include "betalab/fractal_slicer.hpp"

namespace betalab {

namespace {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string config;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t seed = 0;
  std::string out;
  bool strict = false;

  std::string beta = "1.4";
  std::string x = "1";
  int n = 10;
  std::vector<int> depths{8, 12, 16, 20};
  bool exact = false;
  std::string what = "counts";
  int max_depth = 40;
  std::size_t cells = 16384;
  double tol = 1e-10;
  int max_iter = 20000;
  bool no_refine = false;
  std::uint64_t samples = 0;
  std::uint64_t phase_samples = 1000000;
  std::size_t sample_cells = 1024;
  int steps = 1;
  std::size_t bins = 64;
  std::string words_out;
  std::string ifs = "sierpinski_carpet";
  std::vector<double> theta{0.61};
  std::size_t x_grid = 256;
  bool cylinders = false;
};

std::string stem(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

BetaParam parse_beta(const std::string& text) {
  if (text == "golden") return BetaParam::golden();
  if (text.rfind("quadratic:", 0) == 0) {
    const auto body = text.substr(10);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw ConfigError("quadratic base needs p,q");
    return BetaParam::exact_quadratic(std::stoll(body.substr(0, comma)), std::stoll(body.substr(comma + 1)));
  }
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw ConfigError("bad beta '" + text + "'");
  return BetaParam::floating(v);
}

// Exact rational value of "a/b", an integer, or a finite decimal.
std::pair<std::int64_t, std::int64_t> parse_rational(const std::string& text) {
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    return {std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1))};
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) return {std::stoll(text), 1};
  const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  std::int64_t den = 1;
  for (std::size_t k = dot + 1; k < text.size(); ++k) den *= 10;
  return {std::stoll(digits), den};
}

double parse_real(const std::string& text) {
  const auto [a, b] = parse_rational(text);
  if (b == 0) throw ConfigError("zero denominator in '" + text + "'");
  if (text.find('/') != std::string::npos) return static_cast<double>(a) / static_cast<double>(b);
  return std::stod(text);
}

IfsSpec resolve_ifs(const std::string& name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) != names.end() || name == "carpet" || name == "sponge") {
    return preset(name);
  }
  return load_ifs(name);
}

json manifest(const CLI::App& sub, const std::vector<std::string>& outputs) {
  json config = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    std::string value;
    if (opt->get_expected_min() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
    } else {
      value = opt->get_default_str();
    }
    config[name] = value;
  }
  json m;
  m["schema_version"] = kSchemaVersion;
  m["tool"] = "betalab";
  m["subcommand"] = sub.get_name();
  m["config"] = config;
  m["outputs"] = outputs;
  return m;
}

json diagnostics_json(const DensityDiagnostics& d) {
  return {{"l1_residual", d.l1_residual},       {"sup_estimate", d.sup_estimate},
          {"iterations", d.iterations},         {"refinement_stability", d.refinement_stability},
          {"converged", d.converged},           {"last_step_l1", d.last_step_l1},
          {"fixed_point_gap", d.fixed_point_gap}, {"max_jump", d.max_jump},
          {"pointwise_budget", d.pointwise_budget}};
}

SolveOptions solve_options(const Settings& s) {
  SolveOptions o;
  o.tol = s.tol;
  o.max_iter = s.max_iter;
  o.refinement_check = !s.no_refine;
  o.threads = s.threads;
  return o;
}

DensitySolution beta_density(const Settings& s, const BetaParam& beta) {
  auto sol = solve_invariant_density(bernoulli_system(beta), s.cells, solve_options(s));
  if (s.strict && !sol.diagnostics.converged) throw NumericError("density iteration did not converge");
  return sol;
}

struct Run {
  std::vector<std::string> outputs;
  void text(const std::string& path, const std::string& content) {
    write_text(path, content);
    outputs.push_back(path);
  }
  void structured(const std::string& path, const json& j) {
    write_json(path, j);
    outputs.push_back(path);
  }
};

void cmd_density(const Settings& s, Run& run) {
  const auto beta = parse_beta(s.beta).as_float();
  const auto sol = beta_density(s, beta);
  std::ostringstream csv;
  write_density_csv(csv, sol.grid);
  run.text(s.out, csv.str());
  json j;
  j["schema_version"] = kSchemaVersion;
  j["beta"] = beta.value();
  j["cells"] = s.cells;
  j["diagnostics"] = diagnostics_json(sol.diagnostics);
  if (s.samples > 0) {
    const int truncation = minimal_truncation(beta, s.sample_cells) + 8;
    const auto sampled = sample_density(beta, s.samples, truncation, s.sample_cells, s.seed, s.threads);
    const auto coarse = rebin(sol.grid, sol.grid.support(), s.sample_cells);
    j["sampled"] = {{"samples", s.samples},
                    {"cells", s.sample_cells},
                    {"truncation", truncation},
                    {"mean", sampled.mean},
                    {"variance", sampled.variance},
                    {"outside_support", sampled.outside_support},
                    {"l1_vs_ulam", l1_distance(coarse, sampled.grid)}};
  }
  run.structured(stem(s.out) + ".diagnostics.json", j);
}

void cmd_enumerate(const Settings& s, Run& run) {
  const auto beta = parse_beta(s.beta);
  EnumerationOptions opts;
  opts.max_depth = s.max_depth;
  opts.threads = s.threads;
  std::ostringstream csv;
  std::optional<AlgebraicValue> ex;
  if (s.exact) {
    if (!beta.is_exact()) throw ConfigError("--exact needs an algebraic base (golden or quadratic:p,q)");
    const auto [a, den] = parse_rational(s.x);
    ex = QuadraticField(beta).make(a, 0, den);
  }
  const double x = parse_real(s.x);
  const auto fbeta = beta.as_float();
  if (s.what == "counts") {
    const auto series = ex ? count_series(*ex, beta, s.n, opts) : count_series(x, fbeta, s.n, opts);
    csv << "n,N_n,branching,scaled\n";
    double scale = 1.0;
    for (std::size_t k = 0; k < series.count.size(); ++k) {
      csv << k << ',' << series.count[k] << ',' << series.branching[k] << ',' << fmt(scale * series.count[k]) << '\n';
      scale *= beta.value() / 2.0;
    }
  } else if (s.what == "orbit") {
    const auto orbit = ex ? enumerate_orbit(*ex, beta, s.n, opts) : enumerate_orbit(x, fbeta, s.n, opts);
    csv << "value,multiplicity,exact\n";
    for (const auto& e : orbit.entries) {
      csv << fmt(e.value) << ',' << e.multiplicity << ',' << (e.exact ? e.exact->to_string() : "") << '\n';
    }
  } else if (s.what == "words") {
    csv << "word,image\n";
    for (const auto& w : admissible_words(x, fbeta, s.n, s.max_depth)) csv << w.word.to_string() << ',' << fmt(w.image) << '\n';
  } else {
    throw ConfigError("--what must be counts, orbit or words");
  }
  run.text(s.out, csv.str());
}

void cmd_fiber(const Settings& s, Run& run) {
  const auto beta = parse_beta(s.beta).as_float();
  const double x = parse_real(s.x);
  const auto sol = beta_density(s, beta);
  const auto fiber = fiber_distribution(x, beta, s.n, sol.grid);
  const auto bounds = hausdorff_bounds(x, beta, s.n, sol.grid, sol.diagnostics.sup_estimate);
  const auto consistency = fiber_consistency(x, beta, s.n, sol.grid, sol.diagnostics.pointwise_budget);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["x"] = x;
  j["beta"] = beta.value();
  j["gamma"] = bounds.exponent;
  j["n"] = s.n;
  j["mass_sum"] = fiber.mass_sum;
  j["mass_budget"] = fiber_mass_budget(x, beta, s.n, sol.grid, sol.diagnostics.pointwise_budget);
  j["cover_sum"] = bounds.cover_sums.back().value;
  j["upper_cap"] = bounds.upper_cap;
  j["lower_floor"] = bounds.lower_floor;
  j["lower_floor_is_estimate"] = true;
  j["K_estimate"] = bounds.ratio_estimate;
  j["consistency"] = {{"max_defect", consistency.max_defect},
                      {"worst_ratio_to_budget", consistency.worst_ratio},
                      {"within_budget", consistency.within_budget}};
  json covers = json::array();
  for (const auto& c : bounds.cover_sums) covers.push_back({{"n", c.depth}, {"value", c.value}});
  j["cover_sums"] = covers;
  run.structured(s.out, j);
  if (!s.words_out.empty()) {
    std::ostringstream csv;
    csv << "word,mass,image\n";
    for (const auto& e : fiber.entries) csv << e.word.to_string() << ',' << fmt(e.mass) << ',' << fmt(e.image) << '\n';
    run.text(s.words_out, csv.str());
  }
}

void cmd_equidist(const Settings& s, Run& run) {
  const auto beta = parse_beta(s.beta).as_float();
  const double x = parse_real(s.x);
  const auto sol = beta_density(s, beta);
  EnumerationOptions opts;
  opts.max_depth = s.max_depth;
  opts.threads = s.threads;
  const auto rows = equidist_table(x, beta, s.depths, sol.grid, opts);
  std::ostringstream csv;
  write_equidist_csv(csv, rows);
  run.text(s.out, csv.str());
  const int top = *std::max_element(s.depths.begin(), s.depths.end());
  const auto growth = growth_series(x, beta, top, opts);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["beta"] = beta.value();
  j["x"] = x;
  j["density_at_x"] = normalized_density(sol.grid, x);
  j["scaled_counts"] = growth.scaled;
  j["k_series"] = growth.k_series;
  j["k_product"] = growth.k_product;
  j["f_upper"] = growth.f_upper;
  j["f_lower"] = growth.f_lower;
  j["telescoping_exact"] = growth.telescoping_exact;
  run.structured(stem(s.out) + ".growth.json", j);
}

void cmd_dynsys(const Settings& s, Run& run) {
  const auto beta = parse_beta(s.beta).as_float();
  const auto sol = beta_density(s, beta);
  const PhaseSpace space(sol.grid, beta);
  const auto baseline = measure_preservation(space, s.phase_samples, 0, s.seed, s.bins, s.threads);
  const auto report = measure_preservation(space, s.phase_samples, s.steps, s.seed, s.bins, s.threads);
  std::ostringstream csv;
  write_histogram_csv(csv, report.histogram);
  run.text(s.out, csv.str());
  const auto areas = branch_areas(space);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["beta"] = beta.value();
  j["samples"] = s.phase_samples;
  j["steps"] = s.steps;
  j["bins"] = s.bins;
  j["tv"] = report.tv;
  j["baseline_tv"] = baseline.tv;
  j["leaked"] = report.leaked;
  j["membership_tolerance"] = space.tolerance();
  j["branch_areas"] = {areas.lower, areas.upper};
  run.structured(stem(s.out) + ".json", j);
}

void cmd_slice(const Settings& s, Run& run) {
  const SliceGeometry geo(resolve_ifs(s.ifs), s.theta);
  const auto& proj = geo.projection();
  const auto sol = solve_projected_density(proj, s.cells, solve_options(s));
  if (s.strict && !sol.diagnostics.converged) throw NumericError("projected density did not converge");
  const auto& h = sol.grid;
  std::vector<double> xs;
  for (std::size_t i = 0; i < s.x_grid; ++i) {
    xs.push_back(proj.hull.lo + proj.hull.length() * (static_cast<double>(i) + 0.5) / static_cast<double>(s.x_grid));
  }
  const auto coding = check_slice_coding(geo, xs, s.n);
  const double c = estimate_ratio_constant(geo, h, coding.delta, xs, s.n);
  const auto marstrand = marstrand_report(geo, h, c, xs, s.n);

  json slices = json::array();
  std::ostringstream bounds;
  bounds << "x,h,diameter,lower_bound,cover_sum,mass_sum\n";
  std::vector<double> covers;
  std::vector<double> dens;
  for (double x : xs) {
    const auto r = slice_report(geo, h, c, x, s.n);
    covers.push_back(r.cover_sum);
    dens.push_back(r.density);
    json e = {{"x", r.x},
              {"h", r.density},
              {"diameter_estimate", r.diameter_estimate},
              {"lower_bound", r.lower_bound},
              {"cover_sum", r.cover_sum},
              {"mass_sum", r.mass_sum},
              {"single_first_level", r.single_first_level},
              {"dead_end_fraction", r.dead_end_fraction},
              {"cylinder_count", r.cylinders.size()}};
    if (s.cylinders) {
      json list = json::array();
      for (const auto& cyl : r.cylinders) {
        list.push_back({{"word", cyl.word.to_string()},
                        {"mass", cyl.mass},
                        {"hull", {cyl.hull.lo, cyl.hull.hi}},
                        {"diameter_bound", cyl.diameter_bound}});
      }
      e["cylinders"] = list;
    }
    slices.push_back(e);
    bounds << fmt(r.x) << ',' << fmt(r.density) << ',' << fmt(r.diameter_estimate) << ',' << fmt(r.lower_bound) << ','
           << fmt(r.cover_sum) << ',' << fmt(r.mass_sum) << '\n';
  }

  json j;
  j["schema_version"] = kSchemaVersion;
  j["ifs"] = s.ifs;
  j["theta"] = s.theta;
  j["s"] = proj.s;
  j["hull"] = {proj.hull.lo, proj.hull.hi};
  j["attractor_diameter"] = geo.attractor_diameter();
  j["depth"] = s.n;
  j["density_diagnostics"] = diagnostics_json(sol.diagnostics);
  j["delta_estimate"] = coding.delta;
  j["coding_violations"] = coding.violations;
  j["C_estimate"] = c;
  j["K_estimate"] = fit_ratio_k(covers, dens);
  j["marstrand"] = {{"lower_integral", marstrand.lower_integral},
                    {"lower_exact", marstrand.lower_exact},
                    {"upper_estimate", marstrand.upper_estimate},
                    {"consistent", marstrand.consistent}};
  j["slices"] = slices;
  run.structured(s.out, j);
  std::ostringstream csv;
  write_density_csv(csv, h);
  run.text(stem(s.out) + ".density.csv", csv.str());
  run.text(stem(s.out) + ".bounds.csv", bounds.str());
}

void cmd_convolve(const Settings& s, Run& run) {
  const auto ifs = resolve_ifs(s.ifs);
  auto opts = solve_options(s);
  opts.refinement_check = false;
  const auto conv = odd_even_convolution(ifs, s.theta, s.cells, opts);
  const auto direct = solve_projected_density(project_ifs(ifs, s.theta), s.cells, opts);
  std::ostringstream csv;
  write_density_csv(csv, conv);
  run.text(s.out, csv.str());
  json j;
  j["schema_version"] = kSchemaVersion;
  j["ifs"] = s.ifs;
  j["theta"] = s.theta;
  j["cells"] = s.cells;
  j["l1_vs_direct"] = l1_distance(conv, direct.grid);
  j["sup_convolution"] = conv.max_value();
  j["sup_direct"] = direct.grid.max_value();
  run.structured(stem(s.out) + ".json", j);
}

void cmd_presets(const Settings& s, Run& run, std::ostream& out) {
  json list = json::array();
  for (const auto& name : preset_names()) {
    const auto ifs = preset(name);
    list.push_back({{"name", name}, {"dimension", ifs.dimension}, {"maps", ifs.maps.size()}, {"s", moran_dimension(ifs)}});
  }
  json j = {{"schema_version", kSchemaVersion}, {"presets", list}};
  out << j.dump(2) << '\n';
  run.structured(s.out, j);
}

void add_common(CLI::App* sub, Settings& s, const std::string& default_out) {
  s.out = default_out;
  sub->add_option("--config", s.config, "flat key = value file; flags override it");
  sub->add_option("--threads", s.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", s.seed, "RNG seed");
  sub->add_option("--out", s.out, "primary output path");
}

void add_beta(CLI::App* sub, Settings& s) {
  sub->add_option("--beta", s.beta, "base: a number in (1,2), golden, or quadratic:p,q");
}

void add_density_opts(CLI::App* sub, Settings& s) {
  sub->add_option("--cells", s.cells, "grid cells (power of two, >= 256)");
  sub->add_option("--tol", s.tol, "L1 step tolerance of the transfer iteration");
  sub->add_option("--max-iter", s.max_iter, "iteration cap");
  sub->add_flag("--no-refine", s.no_refine, "skip the doubled-grid refinement check");
  sub->add_flag("--strict", s.strict, "exit 3 when the iteration does not converge");
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t\r");
      const auto e = t.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Numerical laboratory for beta-expansions, Bernoulli convolutions and fractal slices", "betalab"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);

  auto* density = app.add_subcommand("density", "invariant density h_beta by Ulam iteration");
  auto* enumerate = app.add_subcommand("enumerate", "orbit multisets, counts and admissible words");
  auto* fiber = app.add_subcommand("fiber", "fiber measure m1_x and Hausdorff cover sums");
  auto* equidist = app.add_subcommand("equidist", "equidistribution distances and growth diagnostics");
  auto* dynsys = app.add_subcommand("dynsys", "measure preservation of phi on X");
  auto* slice = app.add_subcommand("slice", "slice reports for a self-similar set");
  auto* convolve_cmd = app.add_subcommand("convolve", "odd/even convolution of a projected measure");
  auto* presets = app.add_subcommand("presets", "list built-in IFS presets");

  add_common(density, s, "density.csv");
  add_beta(density, s);
  add_density_opts(density, s);
  density->add_option("--samples", s.samples, "Monte Carlo samples for the second estimator (0 = skip)");
  density->add_option("--sample-cells", s.sample_cells, "histogram cells of the sampled estimator");

  add_common(enumerate, s, "enumerate.csv");
  add_beta(enumerate, s);
  enumerate->add_option("--x", s.x, "starting point (decimal or a/b)");
  enumerate->add_option("--n", s.n, "depth");
  enumerate->add_flag("--exact", s.exact, "exact arithmetic in Q(beta)");
  enumerate->add_option("--what", s.what, "counts, orbit or words");
  enumerate->add_option("--max-depth", s.max_depth, "depth cap");

  add_common(fiber, s, "fiber.json");
  add_beta(fiber, s);
  add_density_opts(fiber, s);
  fiber->add_option("--x", s.x, "base point");
  fiber->add_option("--n", s.n, "depth");
  fiber->add_option("--words-out", s.words_out, "optional CSV of words and masses");

  add_common(equidist, s, "equidist.csv");
  add_beta(equidist, s);
  add_density_opts(equidist, s);
  equidist->add_option("--x", s.x, "base point");
  equidist->add_option("--n", s.depths, "comma separated depths")->delimiter(',');
  equidist->add_option("--max-depth", s.max_depth, "depth cap");

  add_common(dynsys, s, "dynsys.csv");
  add_beta(dynsys, s);
  add_density_opts(dynsys, s);
  dynsys->add_option("--samples", s.phase_samples, "uniform samples in X");
  dynsys->add_option("--steps", s.steps, "iterations of phi");
  dynsys->add_option("--bins", s.bins, "histogram bins per axis");

  add_common(slice, s, "slice.json");
  add_density_opts(slice, s);
  slice->add_option("--ifs", s.ifs, "preset name or IFS file");
  slice->add_option("--theta", s.theta, "direction angles, comma separated")->delimiter(',');
  slice->add_option("--x-grid", s.x_grid, "number of slice positions");
  slice->add_option("--depth", s.n, "cylinder depth");
  slice->add_flag("--cylinders", s.cylinders, "include cylinder lists in the JSON");

  add_common(convolve_cmd, s, "convolve.csv");
  add_density_opts(convolve_cmd, s);
  convolve_cmd->add_option("--ifs", s.ifs, "preset name or IFS file");
  convolve_cmd->add_option("--theta", s.theta, "direction angles, comma separated")->delimiter(',');

  add_common(presets, s, "presets.json");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // Config values become flags unless the command line already sets them.
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (!config_path.empty() && !args.empty()) {
      CLI::App* sub = nullptr;
      for (auto* candidate : app.get_subcommands({})) {
        if (candidate->get_name() == args[0]) sub = candidate;
      }
      if (!sub) throw ConfigError("unknown subcommand '" + args[0] + "'");
      std::vector<std::string> injected;
      for (const auto& [key, value] : read_config(config_path)) {
        const std::string flag = "--" + key;
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (!opt || key == "config") throw ConfigError("unknown config key '" + key + "' for " + args[0]);
        if (given(args, flag)) continue;
        if (opt->get_expected_min() == 0) {
          if (value == "true" || value == "1" || value == "yes" || value == "on") injected.push_back(flag);
        } else {
          injected.push_back(flag);
          injected.push_back(value);
        }
      }
      args.insert(args.begin() + 1, injected.begin(), injected.end());
    }

    std::vector<const char*> cargs{argv[0]};
    for (const auto& a : args) cargs.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n\n" << app.help();
      return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    Run result;
    const std::string name = sub->get_name();
    if (name == "density") cmd_density(s, result);
    if (name == "enumerate") cmd_enumerate(s, result);
    if (name == "fiber") cmd_fiber(s, result);
    if (name == "equidist") cmd_equidist(s, result);
    if (name == "dynsys") cmd_dynsys(s, result);
    if (name == "slice") cmd_slice(s, result);
    if (name == "convolve") cmd_convolve(s, result);
    if (name == "presets") cmd_presets(s, result, out);
    const std::string manifest_path = stem(s.out) + ".manifest.json";
    write_json(manifest_path, manifest(*sub, result.outputs));
    return 0;
  } catch (const UndefinedFiberError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const ResourceError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace betalab
