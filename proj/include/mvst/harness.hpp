#ifndef MVST_HARNESS_HPP
#define MVST_HARNESS_HPP

// Monte Carlo replication driver: sample, fit, and summarize many datasets
// drawn from one generating parameter set.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvst/io.hpp"

namespace mvst {

struct ReplicateDigest {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when !ok
  int iterations = 0;
  bool converged = false;
  double final_loglik = 0.0;
  std::optional<MvstParamsd> params;  // normalized estimate when ok
};

struct PhaseTimes {
  double sample_seconds = 0.0;  // summed over replicates
  double fit_seconds = 0.0;     // summed over replicates
  double wall_seconds = 0.0;
};

struct ReplicationOutcome {
  SummaryTable summary;
  std::vector<ReplicateDigest> digests;
  PhaseTimes times;
};

/// Component-wise means and sds (n - 1 denominator, 0 for a single fit) of
/// M, A, Sigma, Psi, nu and Psi (x) Sigma, accumulated in the given order.
SummaryTable summarize(const std::vector<MvstParamsd>& estimates, std::size_t failures = 0);

/// Replicate r draws N observations from a generator seeded with
/// base_seed + r, fits them, and keeps the normalized estimate. Replicates
/// are distributed over `threads` workers; results do not depend on it.
ReplicationOutcome run_replication(const SimConfig& config, unsigned threads = 1);

Json digests_to_json(const std::vector<ReplicateDigest>& digests);
std::vector<ReplicateDigest> digests_from_json(const Json& j);

/// Writes the summary CSV/JSON and per-replicate digests into `out_dir`.
void write_replication(const std::filesystem::path& out_dir, const SimConfig& config,
                       const ReplicationOutcome& outcome);

/// Long-format marginal series, one line per entry of every observation:
/// column,observation,row,value,column_mean (0-based indices).
std::string marginal_series_csv(const Datasetd& data);

/// observation,log_density
std::string density_csv(const Datasetd& data, const MvstParamsd& params);

}  // namespace mvst

#endif  // MVST_HARNESS_HPP
