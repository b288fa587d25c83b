// Command-line front end for the scband shared library. Talks to the
// core exclusively through the C API in scband.h.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scband.h"

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

int exit_code_for(scb_status status) {
  switch (status) {
    case SCB_OK: return 0;
    case SCB_ERR_SCHEMA: return 2;
    case SCB_ERR_FIT: return 3;
    case SCB_ERR_BAND: return 4;
    default: return 1;
  }
}

[[noreturn]] void fail(scb_status status, const std::string& context) {
  std::cerr << "scband: " << context << ": " << scb_last_error() << "\n";
  std::exit(exit_code_for(status));
}

void check(scb_status status, const std::string& context) {
  if (status != SCB_OK) fail(status, context);
}

// All emitted numbers are rounded to 12 significant digits so JSON and
// CSV artifacts carry identical values.
double round12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

json round12_array(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(round12(x));
  return arr;
}

struct SampleHandle {
  scb_sample* ptr = nullptr;
  ~SampleHandle() { scb_sample_free(ptr); }
};

struct ModelHandle {
  scb_model* ptr = nullptr;
  ~ModelHandle() { scb_model_free(ptr); }
};

struct BandHandle {
  scb_band* ptr = nullptr;
  ~BandHandle() { scb_band_free(ptr); }
};

scb_family parse_family(const std::string& name) {
  if (name == "logit") return SCB_FAMILY_LOGIT;
  if (name == "probit") return SCB_FAMILY_PROBIT;
  std::cerr << "scband: unknown family '" << name << "' (logit|probit)\n";
  std::exit(2);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "scband: cannot write " << path << "\n";
    std::exit(1);
  }
  out << text;
}

struct BandColumns {
  std::vector<double> grid, center, lower, upper, variance;
  std::vector<int32_t> valid;
};

BandColumns band_columns(scb_band* band) {
  BandColumns cols;
  const size_t n = scb_band_grid_size(band);
  cols.grid.resize(n);
  cols.center.resize(n);
  cols.lower.resize(n);
  cols.upper.resize(n);
  cols.variance.resize(n);
  cols.valid.resize(n);
  check(scb_band_values(band, cols.grid.data(), cols.center.data(),
                        cols.lower.data(), cols.upper.data(),
                        cols.variance.data(), cols.valid.data()),
        "reading band values");
  return cols;
}

json band_json(scb_band* band, double alpha) {
  double h = 0, h_f = 0, r_n = 0, a_h = 0, b_h = 0, a0 = 0, b0 = 0;
  check(scb_band_constants(band, &h, &h_f, &r_n, &a_h, &b_h), "band constants");
  check(scb_band_interval(band, &a0, &b0), "band interval");
  const BandColumns cols = band_columns(band);
  json j;
  j["alpha"] = round12(alpha);
  j["h"] = round12(h);
  j["h_f"] = round12(h_f);
  j["r_n"] = round12(r_n);
  j["a_h"] = round12(a_h);
  j["b_h"] = round12(b_h);
  j["interval"] = {{"a0", round12(a0)}, {"b0", round12(b0)}};
  j["grid"] = round12_array(cols.grid);
  j["m_hat"] = round12_array(cols.center);
  j["lower"] = round12_array(cols.lower);
  j["upper"] = round12_array(cols.upper);
  j["d_hat"] = round12_array(cols.variance);
  j["valid"] = cols.valid;
  return j;
}

std::string band_csv(const std::vector<std::pair<double, scb_band*>>& bands) {
  std::ostringstream out;
  out << "alpha,index,x,m_hat,lower,upper,d_hat,valid\n";
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
  };
  for (const auto& [alpha, band] : bands) {
    const BandColumns cols = band_columns(band);
    for (size_t k = 0; k < cols.grid.size(); ++k) {
      out << num(alpha) << ',' << k << ',' << num(cols.grid[k]) << ','
          << num(cols.center[k]) << ',' << num(cols.lower[k]) << ','
          << num(cols.upper[k]) << ',' << num(cols.variance[k]) << ','
          << cols.valid[k] << '\n';
    }
  }
  return out.str();
}

json fit_report(scb_sample* sample, scb_model* model, int groups) {
  double stat = 0, pvalue = 0;
  int dof = 0, merged = 0;
  check(scb_hosmer_lemeshow(model, sample, groups, &stat, &dof, &pvalue,
                            &merged),
        "hosmer-lemeshow");
  json j;
  j["alpha_hat"] = {round12(scb_model_intercept(model)),
                    round12(scb_model_slope(model))};
  j["loglik"] = round12(scb_model_loglik(model));
  j["converged"] = scb_model_converged(model) != 0;
  j["iterations"] = scb_model_iterations(model);
  j["hosmer_lemeshow"] = {{"statistic", round12(stat)},
                          {"dof", dof},
                          {"pvalue", round12(pvalue)},
                          {"bins_merged", merged != 0}};
  j["n"] = scb_sample_size(sample);
  j["n_complete"] = scb_sample_complete(sample);
  j["r_n"] = round12(scb_sample_complete_ratio(sample));
  return j;
}

// Piecewise-linear interpolation of an external null curve onto the grid.
std::vector<double> null_from_file(const std::string& path,
                                   const std::vector<double>& grid) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "scband: cannot open null curve file " << path << "\n";
    std::exit(2);
  }
  std::vector<std::pair<double, double>> points;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string xs, vs;
    if (!std::getline(row, xs, ',') || !std::getline(row, vs, ',')) continue;
    try {
      points.emplace_back(std::stod(xs), std::stod(vs));
    } catch (...) {
      if (first) {  // tolerate a header row
        first = false;
        continue;
      }
      std::cerr << "scband: bad row in null curve file: " << line << "\n";
      std::exit(2);
    }
    first = false;
  }
  if (points.size() < 2) {
    std::cerr << "scband: null curve file needs at least 2 numeric rows\n";
    std::exit(2);
  }
  std::sort(points.begin(), points.end());
  std::vector<double> values(grid.size());
  for (size_t k = 0; k < grid.size(); ++k) {
    const double x = grid[k];
    auto hi = std::lower_bound(points.begin(), points.end(),
                               std::make_pair(x, -1e300));
    if (hi == points.begin()) {
      values[k] = points.front().second;
    } else if (hi == points.end()) {
      values[k] = points.back().second;
    } else {
      auto lo = hi - 1;
      const double t = (x - lo->first) / (hi->first - lo->first);
      values[k] = lo->second * (1.0 - t) + hi->second * t;
    }
  }
  return values;
}

struct CommonOptions {
  std::string input;
  std::string family = "logit";
  double floor = 0.01;
};

void load_pipeline(const CommonOptions& common, SampleHandle& sample,
                   ModelHandle& model) {
  check(scb_sample_read_csv(common.input.c_str(), &sample.ptr), "reading input");
  check(scb_fit_selection(sample.ptr, parse_family(common.family), common.floor,
                          &model.ptr),
        "fitting selection model");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::string& format);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous confidence bands for nonparametric regression "
               "with covariates missing at random"};
  app.require_subcommand(1);

  CommonOptions common;
  std::vector<double> alphas;
  double rho = 0.25;
  size_t grid = 401;
  int groups = 10;
  std::string output;
  std::string format = "json";
  std::string null_kind = "linear";
  std::string null_file;
  std::string config_path;
  std::string out_dir = ".";
  std::vector<double> const_alphas = {0.05, 0.01};

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-i,--input", common.input, "input CSV (delta,x,y)")
        ->required();
    cmd->add_option("--family", common.family, "selection family: logit|probit");
    cmd->add_option("--floor", common.floor, "selection probability floor");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit the selection model and test its fit");
  add_common(fit);
  fit->add_option("--groups", groups, "Hosmer-Lemeshow groups");
  fit->add_option("-o,--output", output, "output path (default stdout)");

  CLI::App* band = app.add_subcommand("band", "build simultaneous confidence bands");
  add_common(band);
  band->add_option("-a,--alpha", alphas, "error probabilities (repeatable)");
  band->add_option("--rho", rho, "bandwidth log-correction exponent");
  band->add_option("--grid", grid, "evaluation grid size");
  band->add_option("--format", format, "json|csv");
  band->add_option("-o,--output", output, "output path (default stdout)");

  CLI::App* test = app.add_subcommand("test", "band-based null hypothesis test");
  add_common(test);
  test->add_option("-a,--alpha", alphas, "band error probability for the report");
  test->add_option("--rho", rho, "bandwidth log-correction exponent");
  test->add_option("--grid", grid, "evaluation grid size");
  test->add_option("--null", null_kind, "linear | file");
  test->add_option("--null-file", null_file, "external null curve CSV (x,value)");
  test->add_option("-o,--output", output, "output path (default stdout)");

  CLI::App* simulate = app.add_subcommand("simulate", "run Monte Carlo coverage scenarios");
  simulate->add_option("-c,--config", config_path, "scenario config JSON")->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--format", format, "csv|markdown|both");

  CLI::App* constants = app.add_subcommand("constants", "print kernel functionals and quantiles");
  constants->add_option("-a,--alpha", const_alphas, "error probabilities");

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed()) {
    SampleHandle sample;
    ModelHandle model;
    load_pipeline(common, sample, model);
    json j = fit_report(sample.ptr, model.ptr, groups);
    j["schema_version"] = kSchemaVersion;
    j["family"] = common.family;
    write_text(output, j.dump(2) + "\n");
    return 0;
  }

  if (band->parsed()) {
    if (alphas.empty()) alphas = {0.05};
    SampleHandle sample;
    ModelHandle model;
    load_pipeline(common, sample, model);
    std::vector<BandHandle> handles(alphas.size());
    std::vector<std::pair<double, scb_band*>> built;
    for (size_t i = 0; i < alphas.size(); ++i) {
      check(scb_band_build(sample.ptr, model.ptr, rho, grid, alphas[i],
                           &handles[i].ptr),
            "building band");
      built.emplace_back(alphas[i], handles[i].ptr);
    }
    if (format == "csv") {
      write_text(output, band_csv(built));
    } else {
      json j = fit_report(sample.ptr, model.ptr, groups);
      j["schema_version"] = kSchemaVersion;
      j["family"] = common.family;
      j["bands"] = json::array();
      for (const auto& [alpha, ptr] : built) j["bands"].push_back(band_json(ptr, alpha));
      write_text(output, j.dump(2) + "\n");
    }
    return 0;
  }

  if (test->parsed()) {
    const double alpha = alphas.empty() ? 0.05 : alphas.front();
    SampleHandle sample;
    ModelHandle model;
    load_pipeline(common, sample, model);
    BandHandle band_handle;
    check(scb_band_build(sample.ptr, model.ptr, rho, grid, alpha,
                         &band_handle.ptr),
          "building band");
    const BandColumns cols = band_columns(band_handle.ptr);

    std::vector<double> null_values;
    json null_info;
    if (null_kind == "linear") {
      double a = 0, b = 0;
      check(scb_linear_null(sample.ptr, model.ptr, &a, &b), "fitting linear null");
      null_values.resize(cols.grid.size());
      for (size_t k = 0; k < cols.grid.size(); ++k)
        null_values[k] = a + b * cols.grid[k];
      null_info = {{"kind", "linear"},
                   {"intercept", round12(a)},
                   {"slope", round12(b)}};
    } else if (null_kind == "file") {
      if (null_file.empty()) {
        std::cerr << "scband: --null file requires --null-file\n";
        return 2;
      }
      null_values = null_from_file(null_file, cols.grid);
      null_info = {{"kind", "file"}, {"path", null_file}};
    } else {
      std::cerr << "scband: unknown --null '" << null_kind << "'\n";
      return 2;
    }

    double sup = 0, t_star = 0, pvalue = 0, cover = 0;
    check(scb_band_test(band_handle.ptr, null_values.data(), null_values.size(),
                        &sup, &t_star, &pvalue, &cover),
          "running null test");
    json j;
    j["schema_version"] = kSchemaVersion;
    j["null"] = null_info;
    j["sup_stat"] = round12(sup);
    j["t_star"] = round12(t_star);
    j["pvalue"] = round12(pvalue);
    j["min_cover_level"] = round12(cover);
    j["band"] = band_json(band_handle.ptr, alpha);
    write_text(output, j.dump(2) + "\n");
    return 0;
  }

  if (simulate->parsed()) {
    return cmd_simulate(config_path, out_dir, format);
  }

  if (constants->parsed()) {
    double lambda = 0, cee = 0, mu2 = 0;
    check(scb_kernel_functionals(&lambda, &cee, &mu2), "kernel functionals");
    std::printf("kernel: quartic\n");
    std::printf("lambda = %.12g\n", lambda);
    std::printf("C(K)   = %.12g\n", cee);
    std::printf("mu2    = %.12g\n", mu2);
    for (double a : const_alphas) {
      std::printf("q[%.4g] = %.12g\n", a, scb_gumbel_quantile(a));
    }
    return 0;
  }

  return 1;
}

namespace {

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::string& format) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "scband: cannot open config " << config_path << "\n";
    return 2;
  }
  json config;
  try {
    in >> config;
  } catch (const std::exception& e) {
    std::cerr << "scband: config parse error: " << e.what() << "\n";
    return 2;
  }
  if (!config.contains("scenarios") || !config["scenarios"].is_array() ||
      config["scenarios"].empty()) {
    std::cerr << "scband: config must contain a nonempty 'scenarios' array\n";
    return 2;
  }

  std::filesystem::create_directories(out_dir);

  std::ostringstream table_csv, table_md;
  table_csv << "case,mechanism,alpha0,alpha1,n,replications,level,"
               "scb_coverage,scb_width,cc_coverage,cc_width,failures\n";
  table_md << "| case | mechanism | params | n | level | SCB | SCB-CC | failures |\n"
           << "|---|---|---|---|---|---|---|---|\n";

  int index = 0;
  for (const json& entry : config["scenarios"]) {
    std::vector<std::string> bad;
    auto need = [&](const char* key) {
      if (!entry.contains(key)) bad.push_back(key);
    };
    need("case");
    need("mechanism");
    need("alpha0");
    need("alpha1");
    need("n");
    need("replications");
    if (!bad.empty()) {
      std::cerr << "scband: scenario " << index << " missing keys:";
      for (const auto& k : bad) std::cerr << ' ' << k;
      std::cerr << "\n";
      return 2;
    }

    scb_scenario sc{};
    const std::string case_name = entry["case"].is_number()
                                      ? "case" + std::to_string(entry["case"].get<int>())
                                      : entry["case"].get<std::string>();
    if (case_name == "case1") sc.sim_case = 1;
    else if (case_name == "case2") sc.sim_case = 2;
    else if (case_name == "case3") sc.sim_case = 3;
    else if (case_name == "case4") sc.sim_case = 4;
    else {
      std::cerr << "scband: scenario " << index << ": unknown case '"
                << case_name << "'\n";
      return 2;
    }
    const std::string mech = entry["mechanism"].get<std::string>();
    if (mech == "logit") sc.mechanism = SCB_MECH_LOGIT;
    else if (mech == "probit") sc.mechanism = SCB_MECH_PROBIT;
    else if (mech == "truncated_logit") sc.mechanism = SCB_MECH_TRUNCATED_LOGIT;
    else {
      std::cerr << "scband: scenario " << index << ": unknown mechanism '"
                << mech << "'\n";
      return 2;
    }
    sc.alpha0 = entry["alpha0"].get<double>();
    sc.alpha1 = entry["alpha1"].get<double>();
    sc.n = entry["n"].get<size_t>();
    sc.replications = entry["replications"].get<size_t>();
    sc.seed = entry.value("seed", 0ULL);
    sc.grid_size = entry.value("grid", 401ULL);
    sc.rho = entry.value("rho", 0.25);
    sc.pi_floor = entry.value("pi_floor", 0.01);
    sc.threads = entry.value("threads", 0ULL);

    std::vector<double> levels = entry.value("alpha_levels",
                                             std::vector<double>{0.05, 0.01});
    std::vector<scb_level_result> results(levels.size());
    size_t failures = 0;
    const scb_status status = scb_run_scenario(&sc, levels.data(), levels.size(),
                                               results.data(), &failures);
    if (status != SCB_OK) {
      std::cerr << "scband: scenario " << index << ": " << scb_last_error()
                << "\n";
      return exit_code_for(status);
    }

    json report;
    report["schema_version"] = kSchemaVersion;
    report["scenario"] = {{"case", case_name},
                          {"mechanism", mech},
                          {"alpha0", round12(sc.alpha0)},
                          {"alpha1", round12(sc.alpha1)},
                          {"n", sc.n},
                          {"replications", sc.replications},
                          {"seed", sc.seed},
                          {"grid", sc.grid_size},
                          {"rho", round12(sc.rho)},
                          {"pi_floor", round12(sc.pi_floor)}};
    report["failures"] = failures;
    report["levels"] = json::array();
    char cell[128];
    for (const scb_level_result& r : results) {
      report["levels"].push_back({{"level", round12(r.level)},
                                  {"scb_coverage", round12(r.scb_coverage)},
                                  {"scb_avg_width", round12(r.scb_avg_width)},
                                  {"cc_coverage", round12(r.cc_coverage)},
                                  {"cc_avg_width", round12(r.cc_avg_width)}});
      std::snprintf(cell, sizeof(cell),
                    "%s,%s,%.12g,%.12g,%zu,%zu,%.3f,%.3f,%.3f,%.3f,%.3f,%zu\n",
                    case_name.c_str(), mech.c_str(), sc.alpha0, sc.alpha1, sc.n,
                    sc.replications, r.level, r.scb_coverage, r.scb_avg_width,
                    r.cc_coverage, r.cc_avg_width, failures);
      table_csv << cell;
      std::snprintf(cell, sizeof(cell),
                    "| %s | %s | (%.12g, %.12g) | %zu | %.3f | %.3f(%.3f) | "
                    "%.3f(%.3f) | %zu |\n",
                    case_name.c_str(), mech.c_str(), sc.alpha0, sc.alpha1, sc.n,
                    r.level, r.scb_coverage, r.scb_avg_width, r.cc_coverage,
                    r.cc_avg_width, failures);
      table_md << cell;
    }
    const std::string report_path =
        out_dir + "/scenario_" + std::to_string(index) + ".json";
    std::ofstream out(report_path);
    out << report.dump(2) << "\n";
    ++index;
  }

  if (format == "csv" || format == "both" || format == "json") {
    std::ofstream out(out_dir + "/table.csv");
    out << table_csv.str();
  }
  if (format == "markdown" || format == "both") {
    std::ofstream out(out_dir + "/table.md");
    out << table_md.str();
  }
  return 0;
}

}  // namespace
