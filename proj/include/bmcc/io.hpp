#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bmcc/errors.hpp"
#include "bmcc/matrix.hpp"
#include "bmcc/workflow.hpp"

namespace bmcc::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

// ---------------------------------------------------------------------------
// CSV: header line, comma separated, optional leading-or-anywhere `t` column,
// every other column numeric. UTF-8, LF line endings, '.' decimal point.

struct DataTable {
  std::vector<std::string> columns;  // numeric columns, `t` excluded
  std::vector<double> t;             // empty when the file has no `t` column
  Series rows;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view field, std::size_t line_no, std::size_t col) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                     ": cannot parse '" + std::string(field) + "' as a finite real");
  }
  return v;
}

}  // namespace detail

inline DataTable parse_csv(std::istream& in) {
  DataTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header");
  const auto header = detail::split_fields(line);
  std::optional<std::size_t> t_col;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const auto name = detail::trim(header[j]);
    if (name.empty()) throw ParseError("line 1, column " + std::to_string(j + 1) + ": empty name");
    if (name == "t" && !t_col) {
      t_col = j;
    } else {
      table.columns.emplace_back(name);
    }
  }
  if (table.columns.empty()) throw ParseError("line 1: no numeric columns");
  const auto p = static_cast<Eigen::Index>(table.columns.size());

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    Vector y(p);
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const double v = detail::parse_real(fields[j], line_no, j + 1);
      if (t_col && j == *t_col) {
        table.t.push_back(v);
      } else {
        y(k++) = v;
      }
    }
    table.rows.push_back(std::move(y));
  }
  return table;
}

inline DataTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_csv(in);
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& columns,
                      const Series& rows, bool with_t = true) {
  if (with_t) out << "t,";
  for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (with_t) out << (i + 1) << ',';
    for (Eigen::Index j = 0; j < rows[i].size(); ++j) {
      out << (j ? "," : "") << format_real(rows[i](j));
    }
    out << '\n';
  }
}

inline std::vector<std::string> default_columns(Eigen::Index p) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < p; ++j) out.push_back("y" + std::to_string(j + 1));
  return out;
}

// ---------------------------------------------------------------------------
// JSON helpers. Matrices are {"dim": [rows, cols], "data": [row-major]}.

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return json{{"dim", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw SchemaMismatch("expected an array of reals");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SchemaMismatch("non-numeric vector entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("data")) {
    throw SchemaMismatch("matrix must carry 'dim' and 'data'");
  }
  const auto rows = j.at("dim").at(0).get<Eigen::Index>();
  const auto cols = j.at("dim").at(1).get<Eigen::Index>();
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw SchemaMismatch("matrix data length does not match dim");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = data.at(static_cast<std::size_t>(i * cols + k)).get<double>();
    }
  }
  return m;
}

inline json to_json(const FitReport& r) {
  json mape = json::array();
  for (const auto& v : r.mape) mape.push_back(v ? json(*v) : json(nullptr));
  return json{{"n", r.n}, {"msse", to_json(r.msse)}, {"mae", to_json(r.mae)}, {"mape", mape}};
}

inline FitReport fit_report_from_json(const json& j) {
  FitReport r;
  r.n = j.at("n").get<std::size_t>();
  r.msse = vector_from_json(j.at("msse"));
  r.mae = vector_from_json(j.at("mae"));
  for (const auto& v : j.at("mape")) {
    r.mape.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  }
  return r;
}

inline json to_json(const ChartConfig& c) {
  return json{{"lambda", c.lambda}, {"c", c.c},         {"mu_z", c.mu_z},
              {"sigma_z", c.sigma_z}, {"ucl", c.ucl}, {"lcl", c.lcl}};
}

inline ChartConfig chart_from_json(const json& j) {
  ChartConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.c = j.at("c").get<double>();
  c.mu_z = j.at("mu_z").get<double>();
  c.sigma_z = j.at("sigma_z").get<double>();
  c.ucl = j.at("ucl").get<double>();
  c.lcl = j.at("lcl").get<double>();
  return c;
}

inline json points_to_json(const std::vector<ChartPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts) {
    a.push_back({{"t", p.t},
                 {"x", p.x},
                 {"z", p.z},
                 {"status", p.status == ChartStatus::out_of_control ? "out_of_control"
                                                                    : "in_control"}});
  }
  return a;
}

inline std::vector<ChartPoint> points_from_json(const json& a) {
  std::vector<ChartPoint> out;
  for (const auto& p : a) {
    out.push_back({p.at("t").get<long>(), p.at("x").get<double>(), p.at("z").get<double>(),
                   p.at("status").get<std::string>() == "out_of_control"
                       ? ChartStatus::out_of_control
                       : ChartStatus::in_control});
  }
  return out;
}

// Echo of how a model was produced; stored verbatim in model.json.
struct FitSettings {
  std::uint64_t seed = 1;
  std::vector<std::string> columns;
  std::vector<double> delta_grid;
  double target_arl = 370.4;
  std::size_t reps = 0;
  bool target_estimated = false;
  std::string data_file;
};

inline json model_to_json(const FittedModel& m, const FitSettings& settings) {
  json candidates = json::array();
  for (const auto& c : m.candidates) {
    candidates.push_back({{"delta", c.delta},
                          {"usable", c.usable},
                          {"score", finite_or_null(c.score)},
                          {"fit_report", c.usable ? to_json(c.report) : json(nullptr)}});
  }
  return json{
      {"schema_version", kSchemaVersion},
      {"kind", "bmcc.model"},
      {"tool_version", kToolVersion},
      {"settings",
       {{"seed", settings.seed},
        {"columns", settings.columns},
        {"delta_grid", settings.delta_grid},
        {"target_arl", settings.target_arl},
        {"reps", settings.reps},
        {"target_estimated", settings.target_estimated},
        {"data_file", settings.data_file}}},
      {"delta_opt", m.delta_opt},
      {"m_opt", to_json(m.m_opt)},
      {"S_opt", to_json(m.S_opt)},
      {"P_star", m.P_star},
      {"target", {{"mu", to_json(m.target.mu)}, {"V", to_json(m.target.V.value())}}},
      {"ar", {{"intercept", m.ar.intercept}, {"phi", m.ar.phi}, {"sigma2", m.ar.sigma2}}},
      {"chart", to_json(m.chart)},
      {"recenter", m.recenter},
      {"lbf_offset", m.lbf_offset},
      {"tracking", m.tracking},
      {"differenced", m.differenced},
      {"fit_report", to_json(m.fit_report)},
      {"n_phase1", m.n_phase1},
      {"phase1_state",
       {{"t", m.phase1_state.t},
        {"delta", m.phase1_state.delta},
        {"m", to_json(m.phase1_state.m)},
        {"P", m.phase1_state.P},
        {"sum_outer", to_json(m.phase1_state.sum_outer)}}},
      {"last_observation", m.last_observation ? to_json(*m.last_observation) : json(nullptr)},
      {"candidates", candidates},
      {"calibration", {{"achieved_arl", m.achieved_arl}, {"std_error", m.achieved_arl_se}}},
      {"phase1_points", points_to_json(m.phase1_points)},
      {"warnings", m.warnings},
  };
}

struct LoadedModel {
  FittedModel model;
  FitSettings settings;
};

inline LoadedModel model_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "bmcc.model") {
    throw SchemaMismatch("not a model document");
  }
  if (j.value("schema_version", -1) != kSchemaVersion) {
    throw SchemaMismatch("unsupported schema_version " + j.value("schema_version", json(-1)).dump());
  }
  try {
    const auto& s = j.at("settings");
    FitSettings settings;
    settings.seed = s.at("seed").get<std::uint64_t>();
    settings.columns = s.at("columns").get<std::vector<std::string>>();
    settings.delta_grid = s.at("delta_grid").get<std::vector<double>>();
    settings.target_arl = s.at("target_arl").get<double>();
    settings.reps = s.at("reps").get<std::size_t>();
    settings.target_estimated = s.at("target_estimated").get<bool>();
    settings.data_file = s.at("data_file").get<std::string>();

    FittedModel m{
        .delta_opt = j.at("delta_opt").get<double>(),
        .m_opt = vector_from_json(j.at("m_opt")),
        .S_opt = matrix_from_json(j.at("S_opt")),
        .P_star = j.at("P_star").get<double>(),
        .target = TargetSpec(vector_from_json(j.at("target").at("mu")),
                             matrix_from_json(j.at("target").at("V"))),
        .ar = {j.at("ar").at("intercept").get<double>(), j.at("ar").at("phi").get<double>(),
               j.at("ar").at("sigma2").get<double>()},
        .chart = chart_from_json(j.at("chart")),
    };
    m.recenter = j.at("recenter").get<bool>();
    m.lbf_offset = j.at("lbf_offset").get<double>();
    m.tracking = j.at("tracking").get<bool>();
    m.differenced = j.at("differenced").get<bool>();
    m.fit_report = fit_report_from_json(j.at("fit_report"));
    m.n_phase1 = j.at("n_phase1").get<std::size_t>();
    const auto& st = j.at("phase1_state");
    m.phase1_state.t = st.at("t").get<long>();
    m.phase1_state.delta = st.at("delta").get<double>();
    m.phase1_state.m = vector_from_json(st.at("m"));
    m.phase1_state.P = st.at("P").get<double>();
    m.phase1_state.sum_outer = matrix_from_json(st.at("sum_outer"));
    if (!j.at("last_observation").is_null()) {
      m.last_observation = vector_from_json(j.at("last_observation"));
    }
    for (const auto& c : j.at("candidates")) {
      DeltaCandidate d;
      d.delta = c.at("delta").get<double>();
      d.usable = c.at("usable").get<bool>();
      d.score = c.at("score").is_null() ? std::numeric_limits<double>::infinity()
                                        : c.at("score").get<double>();
      if (!c.at("fit_report").is_null()) d.report = fit_report_from_json(c.at("fit_report"));
      m.candidates.push_back(std::move(d));
    }
    m.achieved_arl = j.at("calibration").at("achieved_arl").get<double>();
    m.achieved_arl_se = j.at("calibration").at("std_error").get<double>();
    m.phase1_points = points_from_json(j.at("phase1_points"));
    m.warnings = j.at("warnings").get<std::vector<std::string>>();

    const auto p = m.target.dim();
    if (m.m_opt.size() != p || m.S_opt.rows() != p || m.S_opt.cols() != p ||
        m.phase1_state.m.size() != p || static_cast<Eigen::Index>(settings.columns.size()) != p) {
      throw SchemaMismatch("model dimensions are inconsistent");
    }
    SpdMatrix check(m.S_opt);
    (void)check;
    return LoadedModel{std::move(m), std::move(settings)};
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("malformed model document: ") + e.what());
  } catch (const NotPositiveDefinite& e) {
    throw SchemaMismatch(std::string("model matrix is not SPD: ") + e.what());
  } catch (const DimensionMismatch& e) {
    throw SchemaMismatch(e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaMismatch(what + " is not valid JSON: " + e.what());
  }
}

// Target file: {"mu": [...], "V": {"dim": [p, p], "data": [...]}}.
inline TargetSpec target_from_json(const json& j) {
  try {
    return TargetSpec(vector_from_json(j.at("mu")), matrix_from_json(j.at("V")));
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("malformed target document: ") + e.what());
  }
}

inline json target_to_json(const TargetSpec& t) {
  return json{{"mu", to_json(t.mu)}, {"V", to_json(t.V.value())}};
}

// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << text;
}

}  // namespace bmcc::io
