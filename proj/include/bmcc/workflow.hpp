#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bmcc/bayes_factor.hpp"
#include "bmcc/chart.hpp"
#include "bmcc/diagnostics.hpp"
#include "bmcc/dwr.hpp"
#include "bmcc/errors.hpp"
#include "bmcc/matrix.hpp"
#include "bmcc/rng.hpp"

namespace bmcc {

inline constexpr std::size_t kMinPhase1Length = 30;
inline constexpr std::size_t kSideRunWarning = 8;

inline std::vector<double> default_delta_grid() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

inline TargetSpec estimate_target(const Series& data) {
  if (data.empty()) throw TooShort("target estimation needs data");
  const auto p = static_cast<std::size_t>(data.front().size());
  if (data.size() < p + 2) {
    throw TooShort("target estimation needs at least p + 2 = " + std::to_string(p + 2) + " rows");
  }
  return TargetSpec(sample_mean(data), SpdMatrix(sample_covariance(data)));
}

inline Series difference(const Series& data) {
  if (data.size() < 2) throw TooShort("differencing needs at least 2 rows");
  Series out;
  out.reserve(data.size() - 1);
  for (std::size_t t = 1; t < data.size(); ++t) out.emplace_back(data[t] - data[t - 1]);
  return out;
}

// Observations that only start the filter before forecasts are scored;
// S_t from fewer rows is too close to singular to standardize against.
inline std::size_t warmup_length(Eigen::Index p) {
  return std::max<std::size_t>(10, 2 * static_cast<std::size_t>(p));
}

// Filter pass over a data set with everything the Phase I diagnostics need.
struct FilterRun {
  double delta = 0.0;
  FilterState final_state;
  // Aligned with data index t_index[k]; only steps where S_{t-1} was
  // positive definite are kept.
  std::vector<std::size_t> t_index;
  Series errors;
  Series observations;
  std::vector<SpdMatrix> forecast_covs;
  std::vector<double> lbf;
  FitReport report;
};

inline FilterRun run_filter(const Series& data, const DwrConfig& config,
                            const TargetSpec* target = nullptr, std::size_t warmup = 0) {
  FilterRun run;
  run.delta = config.delta;
  FilterState state = init(config);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector& y = data[i];
    std::optional<SpdMatrix> S;
    if (i >= warmup) S = state.S_spd();
    if (S) {
      Predictive pred{state.m, state.P, state.delta, *S};
      if (target) run.lbf.push_back(lbf(y, pred, *target));
      run.forecast_covs.push_back(S->scaled(forecast_scale(state)));
      run.t_index.push_back(i);
      run.observations.push_back(y);
      run.errors.push_back(advance(state, y));
    } else {
      advance(state, y);
    }
  }
  run.final_state = std::move(state);
  if (!run.errors.empty()) {
    run.report.msse = msse(standardize_errors(run.errors, run.forecast_covs));
    run.report.mae = mae(run.errors);
    run.report.mape = mape(run.errors, run.observations);
    run.report.n = run.errors.size();
  }
  return run;
}

struct DeltaCandidate {
  double delta = 0.0;
  bool usable = false;
  FitReport report;
  double score = std::numeric_limits<double>::infinity();  // mean |MSSE - 1|
};

struct Phase1Options {
  std::vector<double> delta_grid = default_delta_grid();
  double P0 = 1.0 / 1000.0;
  std::optional<Vector> m0;  // defaults to the target mean
  double lambda = 0.05;
  double target_arl = 370.4;
  std::size_t reps = 100'000;
  bool recenter = false;
  bool tracking = false;
  bool differenced = false;
};

struct FittedModel {
  double delta_opt = 0.0;
  Vector m_opt{};
  Matrix S_opt{};
  double P_star = 0.0;
  TargetSpec target;
  Ar1Model ar{};
  ChartConfig chart{};
  bool recenter = false;
  double lbf_offset = 0.0;
  bool tracking = false;
  bool differenced = false;
  FitReport fit_report{};

  // Provenance and state carried into Phase II.
  std::size_t n_phase1 = 0;
  FilterState phase1_state{};
  std::optional<Vector> last_observation{};  // raw Phase I row, for differencing
  std::vector<DeltaCandidate> candidates{};
  double achieved_arl = 0.0;
  double achieved_arl_se = 0.0;
  std::vector<ChartPoint> phase1_points{};
  std::vector<std::string> warnings{};
};

struct MonitorResult {
  std::vector<ChartPoint> points;
  std::vector<long> signals;
  std::vector<double> lbf;
  std::vector<std::string> warnings;
};

inline Predictive frozen_predictive(const FittedModel& model) {
  return Predictive{model.m_opt, model.P_star, model.delta_opt, SpdMatrix(model.S_opt)};
}

// Offset k such that the EWMA of (x - k) started at 0 has mean exactly zero.
inline double recentering_offset(std::span<const double> x, double lambda) {
  double z = 0.0, decay = 1.0, sum_z = 0.0, sum_w = 0.0;
  for (double v : x) {
    z = lambda * v + (1.0 - lambda) * z;
    decay *= (1.0 - lambda);
    sum_z += z;
    sum_w += 1.0 - decay;
  }
  return sum_z / sum_w;
}

inline std::vector<std::string> side_run_warnings(std::span<const ChartPoint> points,
                                                  double center, const char* phase) {
  std::vector<std::string> out;
  for (const auto& run : one_sided_runs(points, center, kSideRunWarning)) {
    out.push_back(std::string(phase) + ": " + std::to_string(run.end_t - run.start_t + 1) +
                  " consecutive EWMA values " + (run.side > 0 ? "above" : "below") +
                  " center at t = " + std::to_string(run.start_t) + ".." +
                  std::to_string(run.end_t));
  }
  return out;
}

/**
 * Phase I: pick the discount factor by forecast adequacy, fit an AR(1) to
 * the resulting log Bayes factors and calibrate the modified EWMA limits.
 *
 * `data` is the series actually charted (already differenced when
 * options.differenced is set; `raw_last` then carries the last raw row).
 */
inline FittedModel phase1(const Series& data, const TargetSpec& target,
                          const Phase1Options& options, const RngStream& rng,
                          std::optional<Vector> raw_last = std::nullopt) {
  if (data.size() < kMinPhase1Length) {
    throw TooShort("Phase I needs at least " + std::to_string(kMinPhase1Length) + " rows, got " +
                   std::to_string(data.size()));
  }
  const Eigen::Index p = target.dim();
  for (const auto& y : data) {
    if (y.size() != p) throw DimensionMismatch("Phase I row length differs from target dimension");
  }
  if (options.delta_grid.empty()) throw InvalidConfig("empty discount grid");
  validate_lambda(options.lambda);

  DwrConfig config{p, 0.0, options.m0.value_or(target.mu), options.P0};
  std::vector<DeltaCandidate> candidates;
  std::optional<FilterRun> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (double delta : options.delta_grid) {
    config.delta = delta;
    DeltaCandidate cand{delta, false, {}, std::numeric_limits<double>::infinity()};
    std::optional<FilterRun> attempt;
    try {
      attempt = run_filter(data, config, nullptr, warmup_length(p));
    } catch (const NotPositiveDefinite&) {
      // S_t numerically singular: this discount factor is unusable.
    }
    if (attempt) cand.report = attempt->report;
    if (attempt && attempt->errors.size() >= 2 && attempt->final_state.S_spd()) {
      FilterRun& run = *attempt;
      cand.usable = true;
      cand.score = (run.report.msse.array() - 1.0).abs().mean();
      if (cand.score < best_score) {
        best_score = cand.score;
        best = std::move(run);
      }
    }
    candidates.push_back(std::move(cand));
  }
  if (!best) throw DegenerateFit("no discount factor produced a positive definite S");

  config.delta = best->delta;
  const FilterRun scored = run_filter(data, config, &target, warmup_length(p));
  if (scored.lbf.size() < 10) throw DegenerateFit("too few LBF values to identify the chart");

  FittedModel model{
      .delta_opt = best->delta,
      .m_opt = scored.final_state.m,
      .S_opt = scored.final_state.S(),
      .P_star = steady_state_P(best->delta),
      .target = target,
      .ar = {},
      .chart = {},
  };
  model.recenter = options.recenter;
  model.tracking = options.tracking;
  model.differenced = options.differenced;
  model.fit_report = scored.report;
  model.n_phase1 = data.size();
  model.phase1_state = scored.final_state;
  model.last_observation = std::move(raw_last);
  model.candidates = std::move(candidates);

  // The chart is identified on the same LBF Phase II will produce: running
  // filter quantities when tracking, otherwise the frozen end-of-Phase-I ones.
  std::vector<double> phase1_lbf;
  if (options.tracking) {
    phase1_lbf = scored.lbf;
  } else {
    const Predictive frozen = frozen_predictive(model);
    phase1_lbf.reserve(scored.t_index.size());
    for (std::size_t i : scored.t_index) phase1_lbf.push_back(lbf(data[i], frozen, target));
  }

  try {
    model.ar = fit_ar1(phase1_lbf, true);
  } catch (const NonStationary& e) {
    throw DegenerateFit(std::string("LBF series is not stationary: ") + e.what());
  } catch (const ZeroVariance& e) {
    throw DegenerateFit(std::string("LBF series is degenerate: ") + e.what());
  }

  const Calibration cal = calibrate(options.lambda, model.ar, options.target_arl, options.reps, rng);
  model.achieved_arl = cal.achieved.arl;
  model.achieved_arl_se = cal.achieved.std_error;

  double center = model.ar.mean();
  if (options.recenter) {
    model.lbf_offset = recentering_offset(phase1_lbf, options.lambda);
    center = 0.0;
  }
  model.chart = design_chart(model.ar, options.lambda, cal.c, center);

  std::vector<double> shifted(phase1_lbf);
  for (double& v : shifted) v -= model.lbf_offset;
  model.phase1_points = run_chart(shifted, model.chart, model.chart.mu_z,
                                  static_cast<long>(scored.t_index.front()) + 1);
  for (const auto& pt : model.phase1_points) {
    if (pt.status == ChartStatus::out_of_control) {
      model.warnings.push_back("Phase I: EWMA outside limits at t = " + std::to_string(pt.t));
    }
  }
  for (auto& w : side_run_warnings(model.phase1_points, model.chart.mu_z, "Phase I")) {
    model.warnings.push_back(std::move(w));
  }
  return model;
}

/**
 * Phase II: score new observations against the frozen Phase I model and run
 * the EWMA with fixed limits. Time indices continue from Phase I. With
 * `tracking` set, the filter keeps updating m and S from the Phase I state
 * instead of holding them at m_opt, S_opt and P at its limit.
 */
inline MonitorResult phase2(const FittedModel& model, const Series& data) {
  MonitorResult result;
  if (data.empty()) return result;
  const Predictive frozen = frozen_predictive(model);
  FilterState state = model.phase1_state;

  result.lbf.reserve(data.size());
  for (const auto& y : data) {
    if (model.tracking) {
      result.lbf.push_back(lbf(y, state, model.target));
      advance(state, y);
    } else {
      result.lbf.push_back(lbf(y, frozen, model.target));
    }
  }
  std::vector<double> shifted(result.lbf);
  for (double& v : shifted) v -= model.lbf_offset;
  result.points =
      run_chart(shifted, model.chart, model.chart.mu_z, static_cast<long>(model.n_phase1) + 1);
  for (const auto& pt : result.points) {
    if (pt.status == ChartStatus::out_of_control) result.signals.push_back(pt.t);
  }
  result.warnings = side_run_warnings(result.points, model.chart.mu_z, "Phase II");
  return result;
}

}  // namespace bmcc
