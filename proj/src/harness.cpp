#include "mvst/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "mvst/ecm.hpp"
#include "mvst/random.hpp"
#include "mvst/summation.hpp"

namespace mvst {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ParamSummary summarize_one(const std::string& name, const std::vector<Matrix<double>>& values) {
  const std::size_t count = values.size();
  const Eigen::Index rows = values.front().rows();
  const Eigen::Index cols = values.front().cols();
  Matrix<double> mean =
      pairwise_sum<Matrix<double>>(0, count, [&](std::size_t i) { return values[i]; }) /
      static_cast<double>(count);
  Matrix<double> sd = Matrix<double>::Zero(rows, cols);
  if (count > 1) {
    const Matrix<double> ss = pairwise_sum<Matrix<double>>(0, count, [&](std::size_t i) {
      return Matrix<double>((values[i] - mean).array().square());
    });
    sd = (ss / static_cast<double>(count - 1)).array().sqrt();
  }
  return {name, std::move(mean), std::move(sd)};
}

struct ReplicateWork {
  ReplicateDigest digest;
  double sample_seconds = 0.0;
  double fit_seconds = 0.0;
};

ReplicateWork run_one(const SimConfig& config, std::size_t r) {
  ReplicateWork work;
  work.digest.index = r;
  work.digest.seed = config.base_seed + r;
  try {
    auto t0 = Clock::now();
    Rng rng(work.digest.seed);
    const Datasetd data = mvst_sample(rng, config.params, config.sample_size);
    work.sample_seconds = seconds_since(t0);
    t0 = Clock::now();
    const FitResultd result = fit(data, config.fit);
    work.fit_seconds = seconds_since(t0);
    work.digest.ok = true;
    work.digest.iterations = result.iterations;
    work.digest.converged = result.converged;
    work.digest.final_loglik = result.loglik_trace.back();
    work.digest.params = result.params;
  } catch (const Error& e) {
    work.digest.ok = false;
    work.digest.error = e.what();
  }
  return work;
}

}  // namespace

SummaryTable summarize(const std::vector<MvstParamsd>& estimates, std::size_t failures) {
  SummaryTable table;
  table.replicates = estimates.size();
  table.failures = failures;
  if (estimates.empty()) return table;
  auto collect = [&](auto&& get) {
    std::vector<Matrix<double>> out;
    out.reserve(estimates.size());
    for (const auto& e : estimates) out.push_back(get(e));
    return out;
  };
  table.entries.push_back(summarize_one("M", collect([](const auto& e) { return e.location; })));
  table.entries.push_back(summarize_one("A", collect([](const auto& e) { return e.skewness; })));
  table.entries.push_back(
      summarize_one("Sigma", collect([](const auto& e) { return e.row_scale; })));
  table.entries.push_back(summarize_one("Psi", collect([](const auto& e) { return e.col_scale; })));
  table.entries.push_back(summarize_one("nu", collect([](const auto& e) {
                                          return Matrix<double>::Constant(1, 1, e.dof);
                                        })));
  table.entries.push_back(summarize_one("PsiKronSigma", collect([](const auto& e) {
                                          return kron(e.col_scale, e.row_scale);
                                        })));
  for (const auto& e : estimates) table.nu_values.push_back(e.dof);
  return table;
}

ReplicationOutcome run_replication(const SimConfig& config, unsigned threads) {
  validate(config);
  const auto wall_start = Clock::now();
  std::vector<ReplicateWork> work(config.replicates);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(config.replicates)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < config.replicates; r = next++) work[r] = run_one(config, r);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  ReplicationOutcome outcome;
  std::vector<MvstParamsd> estimates;
  std::size_t failures = 0;
  for (auto& w : work) {
    outcome.times.sample_seconds += w.sample_seconds;
    outcome.times.fit_seconds += w.fit_seconds;
    if (w.digest.ok)
      estimates.push_back(*w.digest.params);
    else
      ++failures;
    outcome.digests.push_back(std::move(w.digest));
  }
  outcome.summary = summarize(estimates, failures);
  outcome.times.wall_seconds = seconds_since(wall_start);
  return outcome;
}

Json digests_to_json(const std::vector<ReplicateDigest>& digests) {
  Json out = Json::array();
  for (const auto& d : digests) {
    Json j{{"index", d.index}, {"seed", d.seed}, {"ok", d.ok}};
    if (d.ok) {
      j["iterations"] = d.iterations;
      j["converged"] = d.converged;
      j["final_loglik"] = d.final_loglik;
      j["params"] = params_to_json(*d.params);
    } else {
      j["error"] = d.error;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<ReplicateDigest> digests_from_json(const Json& j) {
  if (!j.is_array()) throw SchemaError("replicate digests must be an array");
  std::vector<ReplicateDigest> out;
  try {
    for (const auto& e : j) {
      ReplicateDigest d;
      d.index = e.at("index").get<std::size_t>();
      d.seed = e.at("seed").get<std::uint64_t>();
      d.ok = e.at("ok").get<bool>();
      if (d.ok) {
        d.iterations = e.at("iterations").get<int>();
        d.converged = e.at("converged").get<bool>();
        d.final_loglik = e.at("final_loglik").get<double>();
        d.params = params_from_json(e.at("params"));
      } else {
        d.error = e.at("error").get<std::string>();
      }
      out.push_back(std::move(d));
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("replicate digest: ") + e.what());
  }
  return out;
}

void write_replication(const std::filesystem::path& out_dir, const SimConfig& config,
                       const ReplicationOutcome& outcome) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  write_summary_csv(out_dir / config.outputs.summary_csv, outcome.summary);
  write_summary_json(out_dir / config.outputs.summary_json, outcome.summary);
  write_text(out_dir / config.outputs.replicates_json,
             digests_to_json(outcome.digests).dump(1) + "\n");
}

std::string marginal_series_csv(const Datasetd& data) {
  validate(data);
  const std::size_t count = data.size();
  std::ostringstream out;
  out << "column,observation,row,value,column_mean\n";
  for (Eigen::Index c = 0; c < data.cols; ++c) {
    // Shifted by the first value so a constant column reproduces it exactly.
    const double origin = data[0](0, c);
    const double shifted = pairwise_sum<double>(0, count, [&](std::size_t i) {
      return (data[i].col(c).array() - origin).sum();
    });
    const double mean =
        origin + shifted / static_cast<double>(count * static_cast<std::size_t>(data.rows));
    const std::string mean_text = format_double(mean);
    for (std::size_t i = 0; i < count; ++i)
      for (Eigen::Index r = 0; r < data.rows; ++r)
        out << c << ',' << i << ',' << r << ',' << format_double(data[i](r, c)) << ','
            << mean_text << '\n';
  }
  return out.str();
}

std::string density_csv(const Datasetd& data, const MvstParamsd& params) {
  validate(data);
  const MvstModel<double> model(params);
  std::ostringstream out;
  out << "observation,log_density\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    out << i << ',' << format_double(model.log_density(data[i])) << '\n';
  return out.str();
}

}  // namespace mvst
