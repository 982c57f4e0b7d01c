// bmcc: Bayesian multivariate control charting from the command line.
//
//   bmcc fit       Phase I: fit, diagnose, calibrate, write model.json
//   bmcc monitor   Phase II: chart new data against a model, write report.json
//   bmcc calibrate Monte-Carlo limit multiplier for a target ARL
//   bmcc simulate  scenario and local-level data generators, LBF study
//
// Exit codes: 0 ok / no signal, 10 signal present, 2 parse or usage error,
// 3 degenerate fit, 4 schema mismatch, 5 calibration failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bmcc/bmcc.hpp"

namespace {

using namespace bmcc;
namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kDegenerate = 3,
  kSchema = 4,
  kCalibration = 5,
  kSignal = 10,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string fmt_vector(const Vector& v, int precision = 4) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v(i), precision);
  return out + "]";
}

std::string fmt_mape(const std::vector<std::optional<double>>& m) {
  std::string out = "[";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += (i ? " " : "") + (m[i] ? fmt(*m[i], 4) : std::string("-"));
  }
  return out + "]";
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::vector<double> delta_grid = default_delta_grid();
  double lambda = 0.05;
  double arl = 370.4;
  std::string target_file;
  bool estimate_target = false;
  bool difference = false;
  bool recenter = false;
  bool tracking = false;
  std::uint64_t seed = 1;
  std::size_t reps = 100'000;
  double P0 = 1.0 / 1000.0;
  std::string out = "model.json";
  std::string report;
};

std::string phase1_report(const FittedModel& m, const io::FitSettings& s) {
  std::ostringstream r;
  r << "Phase I report\n";
  r << "  data: " << s.data_file << " (" << m.n_phase1 << " rows charted"
    << (m.differenced ? ", first differences" : "") << ")\n";
  r << "  target mu: " << fmt_vector(m.target.mu) << (s.target_estimated ? " (estimated)" : "")
    << "\n";
  r << "  discount grid:\n";
  r << "    delta   score      MSSE / MAE / MAPE\n";
  for (const auto& c : m.candidates) {
    r << "    " << fmt(c.delta, 3) << "   ";
    if (!c.usable) {
      r << "unusable\n";
      continue;
    }
    r << fmt(c.score, 4) << "   " << fmt_vector(c.report.msse) << " / " << fmt_vector(c.report.mae)
      << " / " << fmt_mape(c.report.mape) << "\n";
  }
  r << "  selected delta: " << fmt(m.delta_opt, 3) << " (P limit " << fmt(m.P_star) << ")\n";
  r << "  MSSE " << fmt_vector(m.fit_report.msse) << "  MAE " << fmt_vector(m.fit_report.mae)
    << "  MAPE " << fmt_mape(m.fit_report.mape) << "\n";
  r << "  AR(1) on LBF: intercept " << fmt(m.ar.intercept) << ", phi " << fmt(m.ar.phi)
    << ", sigma2 " << fmt(m.ar.sigma2) << "\n";
  r << "  EWMA: lambda " << fmt(m.chart.lambda) << ", c " << fmt(m.chart.c) << " (ARL "
    << fmt(m.achieved_arl, 5) << " +/- " << fmt(m.achieved_arl_se, 3) << ")\n";
  r << "  center " << fmt(m.chart.mu_z) << ", limits [" << fmt(m.chart.lcl) << ", "
    << fmt(m.chart.ucl) << "]" << (m.recenter ? " (recentered, LBF offset " + fmt(m.lbf_offset) + ")" : "")
    << "\n";
  for (const auto& w : m.warnings) r << "  warning: " << w << "\n";
  return r.str();
}

int cmd_fit(const FitArgs& a) {
  if (a.target_file.empty() && !a.estimate_target) {
    throw UsageError("fit needs --target-file or --estimate-target");
  }
  if (!a.target_file.empty() && a.estimate_target) {
    throw UsageError("--target-file and --estimate-target are mutually exclusive");
  }
  const io::DataTable table = io::read_csv(a.data);
  Series data = table.rows;
  std::optional<Vector> raw_last;
  if (a.difference) {
    raw_last = data.back();
    data = difference(data);
  }
  std::optional<TargetSpec> target;
  if (a.estimate_target) {
    TargetSpec est = estimate_target(data);
    if (a.difference) est = TargetSpec(Vector::Zero(est.dim()), est.V);
    target = std::move(est);
  } else {
    target = io::target_from_json(io::parse_json_text(io::read_file(a.target_file), a.target_file));
  }
  if (target->dim() != static_cast<Eigen::Index>(table.columns.size())) {
    throw SchemaMismatch("target dimension does not match the data columns");
  }

  Phase1Options opt;
  opt.delta_grid = a.delta_grid;
  opt.lambda = a.lambda;
  opt.target_arl = a.arl;
  opt.reps = a.reps;
  opt.recenter = a.recenter;
  opt.tracking = a.tracking;
  opt.differenced = a.difference;
  opt.P0 = a.P0;

  FittedModel model = phase1(data, *target, opt, RngStream(a.seed), raw_last);

  io::FitSettings settings;
  settings.seed = a.seed;
  settings.columns = table.columns;
  settings.delta_grid = a.delta_grid;
  settings.target_arl = a.arl;
  settings.reps = a.reps;
  settings.target_estimated = a.estimate_target;
  settings.data_file = a.data;
  io::write_text(a.out, io::dump(io::model_to_json(model, settings)));

  const std::string report = phase1_report(model, settings);
  std::cout << report;
  if (!a.report.empty()) io::write_text(a.report, report);
  return kOk;
}

// ---------------------------------------------------------------------------

struct MonitorArgs {
  std::string data;
  std::string model;
  std::string out = "report.json";
  std::string plot;
};

int cmd_monitor(const MonitorArgs& a) {
  const std::string model_text = io::read_file(a.model);
  const io::LoadedModel loaded =
      io::model_from_json(io::parse_json_text(model_text, a.model));
  const FittedModel& model = loaded.model;

  const io::DataTable table = io::read_csv(a.data);
  if (table.columns != loaded.settings.columns) {
    throw SchemaMismatch("data columns do not match the columns the model was fitted on");
  }
  Series data = table.rows;
  if (model.differenced && !data.empty()) {
    if (!model.last_observation) throw SchemaMismatch("differenced model lacks last_observation");
    data.insert(data.begin(), *model.last_observation);
    data = difference(data);
  }
  const MonitorResult result = phase2(model, data);

  std::vector<std::string> warnings = model.warnings;
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());

  std::vector<double> lbf = result.lbf;
  io::json report{
      {"schema_version", io::kSchemaVersion},
      {"kind", "bmcc.report"},
      {"metadata",
       {{"tool_version", io::kToolVersion},
        {"seed", loaded.settings.seed},
        {"model_file", a.model},
        {"model_hash", io::fnv1a_hex(model_text)},
        {"data_file", a.data},
        {"config",
         {{"delta_opt", model.delta_opt},
          {"P_star", model.P_star},
          {"tracking", model.tracking},
          {"recenter", model.recenter},
          {"differenced", model.differenced},
          {"lbf_offset", model.lbf_offset}}}}},
      {"fit_report", io::to_json(model.fit_report)},
      {"chart", io::to_json(model.chart)},
      {"first_t", model.n_phase1 + 1},
      {"lbf", lbf},
      {"points", io::points_to_json(result.points)},
      {"signals", result.signals},
      {"warnings", warnings},
  };
  io::write_text(a.out, io::dump(report));

  if (!a.plot.empty()) {
    io::write_text(a.plot, svg::render_chart(model.phase1_points, result.points, model.chart));
  }

  std::cout << "monitored " << result.points.size() << " rows, " << result.signals.size()
            << " out-of-control point(s)";
  if (!result.signals.empty()) {
    std::cout << "; first at t = " << result.signals.front();
  }
  std::cout << "\n";
  for (const auto& w : result.warnings) std::cout << "warning: " << w << "\n";
  return result.signals.empty() ? kOk : kSignal;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  double lambda = 0.05;
  double phi = 0.1;
  double sigma2 = 1.0;
  double arl = 370.4;
  std::size_t reps = 100'000;
  std::uint64_t seed = 1;
  std::vector<double> grid_lambda;
  std::vector<double> grid_phi;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& a) {
  if (a.reps < 1000) {
    std::cerr << "warning: " << a.reps
              << " replications give a wide ARL standard error; use --reps >= 1000\n";
  }
  const RngStream rng(a.seed);
  if (a.grid_lambda.empty() && a.grid_phi.empty()) {
    const Ar1Model ar{0.0, a.phi, a.sigma2};
    const Calibration cal = calibrate(a.lambda, ar, a.arl, a.reps, rng);
    std::cout << "c = " << fmt(cal.c, 6) << "\n";
    std::cout << "ARL = " << fmt(cal.achieved.arl, 6) << " (se " << fmt(cal.achieved.std_error, 4)
              << ", reps " << cal.achieved.reps << ", iterations " << cal.iterations << ")\n";
    return kOk;
  }
  const auto lambdas = a.grid_lambda.empty() ? std::vector<double>{a.lambda} : a.grid_lambda;
  const auto phis = a.grid_phi.empty() ? std::vector<double>{a.phi} : a.grid_phi;
  std::ostringstream csv;
  csv << "lambda,phi,c,arl,std_error\n";
  for (double lam : lambdas) {
    for (double phi : phis) {
      const Calibration cal = calibrate(lam, Ar1Model{0.0, phi, a.sigma2}, a.arl, a.reps, rng);
      csv << io::format_real(lam) << ',' << io::format_real(phi) << ',' << io::format_real(cal.c)
          << ',' << io::format_real(cal.achieved.arl) << ','
          << io::format_real(cal.achieved.std_error) << '\n';
    }
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    io::write_text(a.out, csv.str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  bool dwr = false;
  double delta = 0.9;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out;
  bool lbf = false;
  std::string out_dir = ".";
  std::size_t bins = 30;
  std::size_t warmup = 100;
};

int cmd_simulate(const SimulateArgs& a) {
  if (a.dwr == !a.scenario.empty()) throw UsageError("simulate needs exactly one of --scenario or --dwr");
  RngStream rng(a.seed);

  if (a.dwr) {
    const Scenario base = study_scenarios()[0];
    const Series rows = gen_dwr(DwrConfig::with_zero_prior(2, a.delta), base.cov, a.n, rng);
    std::ostringstream csv;
    io::write_csv(csv, io::default_columns(2), rows);
    if (a.out.empty()) std::cout << csv.str(); else io::write_text(a.out, csv.str());
    return kOk;
  }

  std::vector<Scenario> chosen;
  if (a.scenario == "all") {
    for (auto& s : study_scenarios()) chosen.push_back(s);
  } else if (auto s = find_scenario(a.scenario)) {
    chosen.push_back(*s);
  } else {
    throw UsageError("unknown scenario '" + a.scenario +
                     "' (in_control, mean_shift, cov_shift, both_shift, all)");
  }

  if (a.lbf) {
    fs::create_directories(a.out_dir);
    LbfStudyOptions opt;
    opt.n = a.n;
    opt.warmup = a.warmup;
    opt.delta = a.delta;
    std::ostringstream summary;
    summary << "scenario,n,warmup,delta,mean,std_error,skewness\n";
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      RngStream r = rng.child(k);
      const std::vector<double> x = lbf_study(chosen[k], r, opt);
      std::ostringstream hist;
      hist << "bin_lo,bin_hi,count\n";
      for (const auto& b : histogram(x, a.bins)) {
        hist << io::format_real(b.lo) << ',' << io::format_real(b.hi) << ',' << b.count << '\n';
      }
      io::write_text((fs::path(a.out_dir) / ("lbf_" + chosen[k].name + ".csv")).string(), hist.str());
      summary << chosen[k].name << ',' << x.size() << ',' << opt.warmup << ','
              << io::format_real(opt.delta) << ',' << io::format_real(mean(x)) << ','
              << io::format_real(std::sqrt(variance(x) / static_cast<double>(x.size()))) << ','
              << io::format_real(skewness(x)) << '\n';
    }
    io::write_text((fs::path(a.out_dir) / "lbf_summary.csv").string(), summary.str());
    std::cout << summary.str();
    return kOk;
  }

  if (chosen.size() != 1) throw UsageError("--scenario all is only meaningful with --lbf");
  const Series rows = gen_iid(chosen.front(), a.n, rng);
  std::ostringstream csv;
  io::write_csv(csv, io::default_columns(chosen.front().mu.size()), rows);
  if (a.out.empty()) std::cout << csv.str(); else io::write_text(a.out, csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian multivariate control charts for autocorrelated processes"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Phase I: fit the discount model and design the chart");
  fit_cmd->add_option("data", fit.data, "Phase I CSV file")->required();
  fit_cmd->add_option("--delta-grid", fit.delta_grid, "Candidate discount factors")->delimiter(',');
  fit_cmd->add_option("--lambda", fit.lambda, "EWMA smoothing parameter");
  fit_cmd->add_option("--arl", fit.arl, "Target in-control ARL");
  fit_cmd->add_option("--target-file", fit.target_file, "Target JSON {mu, V}");
  fit_cmd->add_flag("--estimate-target", fit.estimate_target, "Estimate target from the data");
  fit_cmd->add_flag("--difference", fit.difference, "Chart first differences (dispersion only)");
  fit_cmd->add_flag("--recenter", fit.recenter, "Shift the chart so Phase I EWMA has mean 0");
  fit_cmd->add_flag("--tracking", fit.tracking, "Keep updating m and S during Phase II");
  fit_cmd->add_option("--seed", fit.seed, "Calibration seed");
  fit_cmd->add_option("--reps", fit.reps, "Monte-Carlo replications for calibration");
  fit_cmd->add_option("--p0", fit.P0, "Prior scale P0");
  fit_cmd->add_option("--out", fit.out, "Model output path");
  fit_cmd->add_option("--report", fit.report, "Also write the Phase I report here");

  MonitorArgs mon;
  auto* mon_cmd = app.add_subcommand("monitor", "Phase II: chart new data against a fitted model");
  mon_cmd->add_option("data", mon.data, "Phase II CSV file")->required();
  mon_cmd->add_option("--model", mon.model, "model.json from `fit`")->required();
  mon_cmd->add_option("--out", mon.out, "Report output path");
  mon_cmd->add_option("--plot", mon.plot, "SVG chart output path");

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Limit multiplier c for a target ARL");
  cal_cmd->add_option("--lambda", cal.lambda, "EWMA smoothing parameter");
  cal_cmd->add_option("--phi", cal.phi, "AR(1) coefficient of the charted statistic");
  cal_cmd->add_option("--sigma2", cal.sigma2, "AR(1) innovation variance");
  cal_cmd->add_option("--arl", cal.arl, "Target in-control ARL");
  cal_cmd->add_option("--reps", cal.reps, "Monte-Carlo replications per candidate");
  cal_cmd->add_option("--seed", cal.seed, "Seed");
  cal_cmd->add_option("--grid-lambda", cal.grid_lambda, "Grid mode: lambda values")->delimiter(',');
  cal_cmd->add_option("--grid-phi", cal.grid_phi, "Grid mode: phi values")->delimiter(',');
  cal_cmd->add_option("--out", cal.out, "Grid mode: CSV output path");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate scenario or local-level data");
  sim_cmd->add_option("--scenario", sim.scenario,
                      "in_control, mean_shift, cov_shift, both_shift or all");
  sim_cmd->add_flag("--dwr", sim.dwr, "Local level process matched to the discount filter");
  sim_cmd->add_option("--delta", sim.delta, "Discount factor for --dwr and --lbf");
  sim_cmd->add_option("-n", sim.n, "Number of rows");
  sim_cmd->add_option("--seed", sim.seed, "Seed");
  sim_cmd->add_option("--out", sim.out, "CSV output path (stdout when omitted)");
  sim_cmd->add_flag("--lbf", sim.lbf, "LBF histogram study instead of raw data");
  sim_cmd->add_option("--out-dir", sim.out_dir, "Directory for --lbf outputs");
  sim_cmd->add_option("--bins", sim.bins, "Histogram bins for --lbf");
  sim_cmd->add_option("--warmup", sim.warmup, "In-control warm-up rows for --lbf");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit);
    if (*mon_cmd) return cmd_monitor(mon);
    if (*cal_cmd) return cmd_calibrate(cal);
    if (*sim_cmd) return cmd_simulate(sim);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const DegenerateFit& e) {
    std::cerr << e.what() << "\n";
    return kDegenerate;
  } catch (const SchemaMismatch& e) {
    std::cerr << e.what() << "\n";
    return kSchema;
  } catch (const BracketFailure& e) {
    std::cerr << e.what() << "\n";
    return kCalibration;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
