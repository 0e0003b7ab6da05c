#ifndef MVST_IO_HPP
#define MVST_IO_HPP

// JSON and CSV file formats. Matrices are always stored as flat row-major
// arrays; doubles are written in shortest round-trip form.
//
//   dataset: {"n": int, "p": int, "N": int, "data": [[n*p reals], ...]}
//   params:  {"M": [...], "A": [...], "Sigma": [...], "Psi": [...], "nu": real}

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "mvst/ecm.hpp"
#include "mvst/mvst.hpp"

namespace mvst {

using Json = nlohmann::json;

/// Component-wise mean and sd of one estimated parameter across replicates.
struct ParamSummary {
  std::string name;
  Matrix<double> mean;
  Matrix<double> sd;
};

struct SummaryTable {
  std::size_t replicates = 0;  // successful fits summarized
  std::size_t failures = 0;
  std::vector<ParamSummary> entries;  // M, A, Sigma, Psi, nu, PsiKronSigma
  std::vector<double> nu_values;

  const ParamSummary& at(const std::string& name) const;
};

struct SimOutputs {
  std::string summary_csv = "summary.csv";
  std::string summary_json = "summary.json";
  std::string replicates_json = "replicates.json";
};

struct SimConfig {
  MvstParamsd params;
  std::size_t sample_size = 100;  // N per dataset
  std::size_t replicates = 50;
  std::uint64_t base_seed = 1;
  FitConfigd fit;
  SimOutputs outputs;
};

void validate(const SimConfig& config);

std::string format_double(double value);

Json matrix_to_json(const Matrix<double>& m);
Matrix<double> matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols,
                                const std::string& name);

Json dataset_to_json(const Datasetd& data);
Datasetd dataset_from_json(const Json& j);
Json params_to_json(const MvstParamsd& params);
MvstParamsd params_from_json(const Json& j);
Json fit_config_to_json(const FitConfigd& config);
FitConfigd fit_config_from_json(const Json& j);
Json fit_result_to_json(const FitResultd& result);
FitResultd fit_result_from_json(const Json& j);
Json sim_config_to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& j);
Json summary_to_json(const SummaryTable& table);
std::string summary_to_csv(const SummaryTable& table);

/// Parses JSON text; malformed input raises ParseError.
Json parse_json(const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

Datasetd read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Datasetd& data);
MvstParamsd read_params(const std::filesystem::path& path);
void write_params(const std::filesystem::path& path, const MvstParamsd& params);
FitConfigd read_fit_config(const std::filesystem::path& path);
FitResultd read_fit_result(const std::filesystem::path& path);
void write_fit_result(const std::filesystem::path& path, const FitResultd& result);
SimConfig read_sim_config(const std::filesystem::path& path);
void write_sim_config(const std::filesystem::path& path, const SimConfig& config);
void write_summary_csv(const std::filesystem::path& path, const SummaryTable& table);
void write_summary_json(const std::filesystem::path& path, const SummaryTable& table);

}  // namespace mvst

#endif  // MVST_IO_HPP
