#include "mvst/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace mvst {

namespace {

void require_object(const Json& j, const std::string& what) {
  if (!j.is_object()) throw SchemaError(what + " must be a JSON object");
}

void require_only_keys(const Json& j, std::initializer_list<const char*> allowed,
                       const std::string& what) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.contains(it.key()))
      throw SchemaError(what + ": unexpected key \"" + it.key() + "\"");
}

const Json& require_key(const Json& j, const char* key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(what + ": missing key \"" + key + "\"");
  return *it;
}

double as_real(const Json& j, const std::string& name) {
  if (!j.is_number()) throw SchemaError(name + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw NonFiniteError(name + " is not finite");
  return v;
}

std::int64_t as_integer(const Json& j, const std::string& name) {
  if (!j.is_number_integer()) throw SchemaError(name + " must be an integer");
  return j.get<std::int64_t>();
}

std::vector<double> as_real_array(const Json& j, const std::string& name) {
  if (!j.is_array()) throw SchemaError(name + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(as_real(j[k], name + "[" + std::to_string(k) + "]"));
  return out;
}

Eigen::Index square_side(std::size_t length, const std::string& name) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(length))));
  if (side == 0 || side * side != length)
    throw SchemaError(name + " must hold a non-empty square matrix");
  return static_cast<Eigen::Index>(side);
}

Matrix<double> from_row_major(const std::vector<double>& flat, Eigen::Index rows,
                              Eigen::Index cols) {
  Matrix<double> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  return m;
}

const char* strategy_name(InitStrategy s) {
  return s == InitStrategy::moment ? "moment" : "provided";
}

}  // namespace

const ParamSummary& SummaryTable::at(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw ValidationError("summary has no parameter " + name);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

Json matrix_to_json(const Matrix<double>& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) throw NonFiniteError("cannot serialize non-finite value");
      out.push_back(m(r, c));
    }
  return out;
}

Matrix<double> matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols,
                                const std::string& name) {
  const auto flat = as_real_array(j, name);
  if (flat.size() != static_cast<std::size_t>(rows * cols))
    throw SchemaError(name + " must have " + std::to_string(rows * cols) + " entries");
  return from_row_major(flat, rows, cols);
}

// ------------------------------------------------------------------ dataset

Json dataset_to_json(const Datasetd& data) {
  validate(data);
  Json rows = Json::array();
  for (const auto& x : data.observations) rows.push_back(matrix_to_json(x));
  return Json{{"n", data.rows}, {"p", data.cols}, {"N", data.size()}, {"data", rows}};
}

Datasetd dataset_from_json(const Json& j) {
  require_object(j, "dataset");
  require_only_keys(j, {"n", "p", "N", "data"}, "dataset");
  const auto n = as_integer(require_key(j, "n", "dataset"), "n");
  const auto p = as_integer(require_key(j, "p", "dataset"), "p");
  const auto count = as_integer(require_key(j, "N", "dataset"), "N");
  const Json& rows = require_key(j, "data", "dataset");
  if (n < 1 || p < 1) throw SchemaError("dataset: n and p must be positive");
  if (!rows.is_array()) throw SchemaError("dataset: data must be an array");
  if (rows.empty()) throw SchemaError("dataset: no observations");
  if (count != static_cast<std::int64_t>(rows.size()))
    throw SchemaError("dataset: N does not match the number of observations");
  Datasetd data{n, p, {}};
  data.observations.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array()) throw DimensionError(i, "entry is not an array");
    if (rows[i].size() != static_cast<std::size_t>(n * p))
      throw DimensionError(i, "expected " + std::to_string(n * p) + " values, found " +
                                  std::to_string(rows[i].size()));
    const auto flat = as_real_array(rows[i], "observation " + std::to_string(i));
    data.observations.push_back(from_row_major(flat, n, p));
  }
  return data;
}

// ------------------------------------------------------------------ params

Json params_to_json(const MvstParamsd& params) {
  validate(params);
  return Json{{"M", matrix_to_json(params.location)},
              {"A", matrix_to_json(params.skewness)},
              {"Sigma", matrix_to_json(params.row_scale)},
              {"Psi", matrix_to_json(params.col_scale)},
              {"nu", params.dof}};
}

MvstParamsd params_from_json(const Json& j) {
  require_object(j, "params");
  require_only_keys(j, {"M", "A", "Sigma", "Psi", "nu"}, "params");
  const auto sigma = as_real_array(require_key(j, "Sigma", "params"), "Sigma");
  const auto psi = as_real_array(require_key(j, "Psi", "params"), "Psi");
  const Eigen::Index n = square_side(sigma.size(), "Sigma");
  const Eigen::Index p = square_side(psi.size(), "Psi");
  MvstParamsd params;
  params.location = matrix_from_json(require_key(j, "M", "params"), n, p, "M");
  params.skewness = matrix_from_json(require_key(j, "A", "params"), n, p, "A");
  params.row_scale = from_row_major(sigma, n, n);
  params.col_scale = from_row_major(psi, p, p);
  params.dof = as_real(require_key(j, "nu", "params"), "nu");
  validate(params);
  return params;
}

// ------------------------------------------------------------------ fit config / result

Json fit_config_to_json(const FitConfigd& config) {
  Json out{{"max_iterations", config.max_iterations},
           {"epsilon", config.epsilon},
           {"nu_bounds", {config.nu_low, config.nu_high}},
           {"seed", config.seed},
           {"init_strategy", strategy_name(config.init)}};
  if (config.initial) out["initial_params"] = params_to_json(*config.initial);
  return out;
}

FitConfigd fit_config_from_json(const Json& j) {
  require_object(j, "fit config");
  require_only_keys(j,
                    {"max_iterations", "epsilon", "nu_bounds", "seed", "init_strategy",
                     "initial_params"},
                    "fit config");
  FitConfigd config;
  if (j.contains("max_iterations")) {
    const auto v = as_integer(j["max_iterations"], "max_iterations");
    if (v < 1 || v > 100000000) throw SchemaError("max_iterations out of range");
    config.max_iterations = static_cast<int>(v);
  }
  if (j.contains("epsilon")) config.epsilon = as_real(j["epsilon"], "epsilon");
  if (j.contains("nu_bounds")) {
    const auto b = as_real_array(j["nu_bounds"], "nu_bounds");
    if (b.size() != 2) throw SchemaError("nu_bounds must have two entries");
    config.nu_low = b[0];
    config.nu_high = b[1];
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SchemaError("seed must be a non-negative integer");
    config.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("init_strategy")) {
    if (!j["init_strategy"].is_string()) throw SchemaError("init_strategy must be a string");
    const auto s = j["init_strategy"].get<std::string>();
    if (s == "moment")
      config.init = InitStrategy::moment;
    else if (s == "provided")
      config.init = InitStrategy::provided;
    else
      throw SchemaError("init_strategy must be \"moment\" or \"provided\"");
  }
  if (j.contains("initial_params")) config.initial = params_from_json(j["initial_params"]);
  validate(config);
  return config;
}

Json fit_result_to_json(const FitResultd& result) {
  Json trace = Json::array();
  for (double v : result.loglik_trace) trace.push_back(v);
  Json history = Json::array();
  for (double v : result.aitken_history) history.push_back(std::isfinite(v) ? Json(v) : Json());
  return Json{{"params", params_to_json(result.params)},
              {"loglik_trace", trace},
              {"iterations", result.iterations},
              {"converged", result.converged},
              {"aitken_history", history},
              {"initial_loglik", result.initial_loglik},
              {"nu_clamped", result.nu_clamped}};
}

FitResultd fit_result_from_json(const Json& j) {
  require_object(j, "fit result");
  require_only_keys(j,
                    {"params", "loglik_trace", "iterations", "converged", "aitken_history",
                     "initial_loglik", "nu_clamped"},
                    "fit result");
  FitResultd result;
  result.params = params_from_json(require_key(j, "params", "fit result"));
  result.loglik_trace =
      as_real_array(require_key(j, "loglik_trace", "fit result"), "loglik_trace");
  result.iterations =
      static_cast<int>(as_integer(require_key(j, "iterations", "fit result"), "iterations"));
  const Json& converged = require_key(j, "converged", "fit result");
  if (!converged.is_boolean()) throw SchemaError("converged must be a boolean");
  result.converged = converged.get<bool>();
  const Json& history = require_key(j, "aitken_history", "fit result");
  if (!history.is_array()) throw SchemaError("aitken_history must be an array");
  for (const auto& v : history)
    result.aitken_history.push_back(v.is_null() ? std::nan("") : as_real(v, "aitken_history"));
  result.initial_loglik =
      as_real(require_key(j, "initial_loglik", "fit result"), "initial_loglik");
  result.nu_clamped =
      static_cast<int>(as_integer(require_key(j, "nu_clamped", "fit result"), "nu_clamped"));
  return result;
}

// ------------------------------------------------------------------ simulation config

void validate(const SimConfig& config) {
  validate(config.params);
  validate(config.fit);
  if (config.replicates < 1) throw ValidationError("replicates must be >= 1");
  if (config.sample_size < 2) throw ValidationError("N must be >= 2");
}

Json sim_config_to_json(const SimConfig& config) {
  return Json{{"params", params_to_json(config.params)},
              {"N", config.sample_size},
              {"replicates", config.replicates},
              {"base_seed", config.base_seed},
              {"fit", fit_config_to_json(config.fit)},
              {"outputs",
               {{"summary_csv", config.outputs.summary_csv},
                {"summary_json", config.outputs.summary_json},
                {"replicates_json", config.outputs.replicates_json}}}};
}

SimConfig sim_config_from_json(const Json& j) {
  require_object(j, "simulation config");
  require_only_keys(j, {"params", "N", "replicates", "base_seed", "fit", "outputs"},
                    "simulation config");
  SimConfig config;
  config.params = params_from_json(require_key(j, "params", "simulation config"));
  const auto n = as_integer(require_key(j, "N", "simulation config"), "N");
  const auto r = as_integer(require_key(j, "replicates", "simulation config"), "replicates");
  if (n < 2) throw SchemaError("N must be >= 2");
  if (r < 1) throw SchemaError("replicates must be >= 1");
  config.sample_size = static_cast<std::size_t>(n);
  config.replicates = static_cast<std::size_t>(r);
  if (j.contains("base_seed")) {
    if (!j["base_seed"].is_number_unsigned())
      throw SchemaError("base_seed must be a non-negative integer");
    config.base_seed = j["base_seed"].get<std::uint64_t>();
  }
  if (j.contains("fit")) config.fit = fit_config_from_json(j["fit"]);
  if (j.contains("outputs")) {
    const Json& o = j["outputs"];
    require_object(o, "outputs");
    require_only_keys(o, {"summary_csv", "summary_json", "replicates_json"}, "outputs");
    auto get = [&](const char* key, std::string& dst) {
      if (!o.contains(key)) return;
      if (!o[key].is_string() || o[key].get<std::string>().empty())
        throw SchemaError(std::string("outputs.") + key + " must be a non-empty string");
      dst = o[key].get<std::string>();
    };
    get("summary_csv", config.outputs.summary_csv);
    get("summary_json", config.outputs.summary_json);
    get("replicates_json", config.outputs.replicates_json);
  }
  validate(config);
  return config;
}

// ------------------------------------------------------------------ summaries

Json summary_to_json(const SummaryTable& table) {
  Json params = Json::object();
  for (const auto& e : table.entries) {
    params[e.name] = Json{{"rows", e.mean.rows()},
                          {"cols", e.mean.cols()},
                          {"mean", matrix_to_json(e.mean)},
                          {"sd", matrix_to_json(e.sd)}};
  }
  Json nu = Json::array();
  for (double v : table.nu_values) nu.push_back(v);
  Json order = Json::array();
  for (const auto& e : table.entries) order.push_back(e.name);
  return Json{{"replicates", table.replicates},
              {"failures", table.failures},
              {"order", order},
              {"parameters", params},
              {"nu_values", nu}};
}

std::string summary_to_csv(const SummaryTable& table) {
  std::ostringstream out;
  out << "parameter,row,col,mean,sd\n";
  for (const auto& e : table.entries)
    for (Eigen::Index r = 0; r < e.mean.rows(); ++r)
      for (Eigen::Index c = 0; c < e.mean.cols(); ++c)
        out << e.name << ',' << r << ',' << c << ',' << format_double(e.mean(r, c)) << ','
            << format_double(e.sd(r, c)) << '\n';
  return out.str();
}

// ------------------------------------------------------------------ files

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

namespace {
Json read_json_file(const std::filesystem::path& path) { return parse_json(read_text(path)); }
void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(1) + "\n");
}
}  // namespace

Datasetd read_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json_file(path));
}
void write_dataset(const std::filesystem::path& path, const Datasetd& data) {
  write_json_file(path, dataset_to_json(data));
}
MvstParamsd read_params(const std::filesystem::path& path) {
  return params_from_json(read_json_file(path));
}
void write_params(const std::filesystem::path& path, const MvstParamsd& params) {
  write_json_file(path, params_to_json(params));
}
FitConfigd read_fit_config(const std::filesystem::path& path) {
  return fit_config_from_json(read_json_file(path));
}
FitResultd read_fit_result(const std::filesystem::path& path) {
  return fit_result_from_json(read_json_file(path));
}
void write_fit_result(const std::filesystem::path& path, const FitResultd& result) {
  write_json_file(path, fit_result_to_json(result));
}
SimConfig read_sim_config(const std::filesystem::path& path) {
  return sim_config_from_json(read_json_file(path));
}
void write_sim_config(const std::filesystem::path& path, const SimConfig& config) {
  write_json_file(path, sim_config_to_json(config));
}
void write_summary_csv(const std::filesystem::path& path, const SummaryTable& table) {
  write_text(path, summary_to_csv(table));
}
void write_summary_json(const std::filesystem::path& path, const SummaryTable& table) {
  write_json_file(path, summary_to_json(table));
}

}  // namespace mvst
