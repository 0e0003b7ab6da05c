#include <charconv>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "mvst/harness.hpp"
#include "mvst/io.hpp"

using fixtures::Mat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mvst_test_io";
  fs::create_directories(dir);
  return dir / name;
}

bool bitwise_equal(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

mvst::Datasetd awkward_dataset() {
  std::mt19937_64 gen(17);
  mvst::Datasetd d{3, 4, {}};
  for (int i = 0; i < 6; ++i) d.observations.push_back(fixtures::random_matrix(gen, 3, 4, 1e3));
  d.observations[0](0, 0) = 0.1;
  d.observations[0](1, 2) = 5e-324;
  d.observations[0](2, 3) = -1.7976931348623157e308;
  d.observations[1](0, 1) = 1.0 / 3.0;
  d.observations[1](2, 0) = -0.0;
  return d;
}

std::string mutate(std::string text, std::mt19937_64& gen) {
  static const std::string alphabet = "{}[],:\"0123456789.eE-+ntfalsuri \n";
  std::uniform_int_distribution<int> op(0, 3);
  std::uniform_int_distribution<std::size_t> pos(0, text.size() - 1);
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
  const int edits = 1 + op(gen);
  for (int k = 0; k < edits && !text.empty(); ++k) {
    const std::size_t at = pos(gen) % text.size();
    switch (op(gen)) {
      case 0: text[at] = alphabet[ch(gen)]; break;
      case 1: text.erase(at, 1); break;
      case 2: text.insert(at, 1, alphabet[ch(gen)]); break;
      default: text.erase(at, std::min<std::size_t>(text.size() - at, 1 + pos(gen) % 12)); break;
    }
  }
  return text;
}

template <typename Reader>
void fuzz(const std::string& valid, Reader read, int rounds, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  int rejected = 0;
  for (int i = 0; i < rounds; ++i) {
    const std::string text = mutate(valid, gen);
    try {
      read(mvst::parse_json(text));
    } catch (const mvst::Error& e) {
      ++rejected;
      CHECK(std::strlen(e.what()) > 0);
    } catch (const std::exception& e) {
      CAPTURE(text);
      FAIL("unnamed exception: " << std::string(e.what()));
    }
  }
  CHECK(rejected > rounds / 2);
}

}  // namespace

TEST_CASE("dataset: bitwise round trip through a file") {
  const auto d = awkward_dataset();
  const auto path = scratch("dataset.json");
  mvst::write_dataset(path, d);
  const auto back = mvst::read_dataset(path);
  REQUIRE(back.size() == d.size());
  CHECK(back.rows == 3);
  CHECK(back.cols == 4);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(bitwise_equal(back[i], d[i]));
  CHECK(std::signbit(back[1](2, 0)));
}

TEST_CASE("dataset: storage is row-major") {
  const auto j = mvst::parse_json(R"({"n": 2, "p": 3, "N": 1, "data": [[1, 2, 3, 4, 5, 6]]})");
  const auto d = mvst::dataset_from_json(j);
  Mat expected(2, 3);
  expected << 1, 2, 3, 4, 5, 6;
  CHECK(d[0] == expected);
}

TEST_CASE("dataset: named errors") {
  try {
    mvst::dataset_from_json(mvst::parse_json(
        R"({"n": 1, "p": 2, "N": 3, "data": [[1, 2], [3, 4], [5]]})"));
    FAIL("expected a dimension error");
  } catch (const mvst::DimensionError& e) {
    CHECK(e.index() == 2);
  }
  CHECK_THROWS_AS(mvst::dataset_from_json(mvst::parse_json(R"({"n": 1, "p": 2, "N": 0, "data": []})")),
                  mvst::SchemaError);
  CHECK_THROWS_AS(mvst::dataset_from_json(mvst::parse_json(
                      R"({"n": 1, "p": 1, "N": 1, "data": [[1e400]]})")),
                  mvst::ValidationError);
  CHECK_THROWS_AS(mvst::parse_json("{\"n\": 1,"), mvst::ParseError);
  CHECK_THROWS_AS(mvst::read_dataset(scratch("does_not_exist.json")), mvst::IoError);
  CHECK_THROWS_AS(mvst::dataset_from_json(mvst::parse_json(
                      R"({"n": 1, "p": 1, "N": 1, "data": [[1]], "extra": 0})")),
                  mvst::SchemaError);
}

TEST_CASE("params: simulation 1 round trip and validation on read") {
  const auto p = fixtures::simulation1();
  const auto path = scratch("sim1_params.json");
  mvst::write_params(path, p);
  const auto back = mvst::read_params(path);
  CHECK(bitwise_equal(back.location, p.location));
  CHECK(bitwise_equal(back.skewness, p.skewness));
  CHECK(bitwise_equal(back.row_scale, p.row_scale));
  CHECK(bitwise_equal(back.col_scale, p.col_scale));
  CHECK(back.dof == 4.0);

  auto j = mvst::params_to_json(p);
  j["Sigma"] = {1, 2, 0, 2, 1, 0, 0, 0, 1};
  CHECK_THROWS_AS(mvst::params_from_json(j), mvst::ValidationError);
  j = mvst::params_to_json(p);
  j["nu"] = -1;
  CHECK_THROWS_AS(mvst::params_from_json(j), mvst::ValidationError);
  j = mvst::params_to_json(p);
  j["M"] = {1, 2, 3};
  CHECK_THROWS_AS(mvst::params_from_json(j), mvst::SchemaError);

  std::mt19937_64 gen(8);
  for (int i = 0; i < 20; ++i) {
    const auto r = fixtures::random_params(gen, 2, 5);
    const auto rb = mvst::params_from_json(mvst::parse_json(mvst::params_to_json(r).dump()));
    CHECK(bitwise_equal(rb.location, r.location));
    CHECK(bitwise_equal(rb.col_scale, r.col_scale));
    CHECK(rb.dof == r.dof);
  }
}

TEST_CASE("fit config, fit result and sim config round trips") {
  mvst::FitConfigd c;
  c.max_iterations = 77;
  c.epsilon = 1e-9;
  c.nu_low = 1.5;
  c.nu_high = 60;
  c.seed = 12345678901234ull;
  c.init = mvst::InitStrategy::provided;
  c.initial = fixtures::simulation2();
  const auto cb = mvst::fit_config_from_json(mvst::parse_json(mvst::fit_config_to_json(c).dump()));
  CHECK(cb.max_iterations == 77);
  CHECK(cb.epsilon == 1e-9);
  CHECK(cb.nu_low == 1.5);
  CHECK(cb.nu_high == 60);
  CHECK(cb.seed == c.seed);
  CHECK(cb.init == mvst::InitStrategy::provided);
  REQUIRE(cb.initial);
  CHECK(bitwise_equal(cb.initial->location, c.initial->location));

  auto bad = mvst::fit_config_to_json(c);
  bad["nu_bounds"] = {5, 2};
  CHECK_THROWS_AS(mvst::fit_config_from_json(bad), mvst::ValidationError);

  mvst::FitResultd r;
  r.params = fixtures::simulation1();
  r.loglik_trace = {-10.5, -9.25, -9.0000000001};
  r.iterations = 3;
  r.converged = true;
  r.aitken_history = {0.123456789012345};
  r.initial_loglik = -20.0;
  r.nu_clamped = 1;
  const auto path = scratch("fit.json");
  mvst::write_fit_result(path, r);
  const auto rb = mvst::read_fit_result(path);
  CHECK(rb.loglik_trace == r.loglik_trace);
  CHECK(rb.aitken_history == r.aitken_history);
  CHECK(rb.iterations == 3);
  CHECK(rb.converged);
  CHECK(bitwise_equal(rb.params.skewness, r.params.skewness));

  mvst::SimConfig s;
  s.params = fixtures::simulation1();
  s.sample_size = 100;
  s.replicates = 50;
  s.base_seed = 9;
  const auto sp = scratch("sim1.json");
  mvst::write_sim_config(sp, s);
  const auto sb = mvst::read_sim_config(sp);
  CHECK(sb.sample_size == 100);
  CHECK(sb.replicates == 50);
  CHECK(sb.base_seed == 9);
  CHECK(bitwise_equal(sb.params.location, fixtures::m1()));
  CHECK(bitwise_equal(sb.params.skewness, fixtures::a1()));
  CHECK(sb.params.dof == 4.0);
  CHECK(sb.outputs.summary_csv == "summary.csv");
}

TEST_CASE("summary: single replicate has zero sd, CSV and JSON agree") {
  const auto one = mvst::summarize({fixtures::simulation1()});
  for (const auto& e : one.entries) CHECK(e.sd.isZero(0.0));
  CHECK(one.replicates == 1);

  std::mt19937_64 gen(4);
  std::vector<mvst::MvstParamsd> many;
  for (int i = 0; i < 5; ++i) many.push_back(fixtures::random_params(gen, 3, 4));
  const auto table = mvst::summarize(many, 2);
  CHECK(table.failures == 2);

  const auto j = mvst::parse_json(mvst::summary_to_json(table).dump());
  std::istringstream csv(mvst::summary_to_csv(table));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "parameter,row,col,mean,sd");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    REQUIRE(f.size() == 5);
    const auto& entry = j["parameters"][f[0]];
    const auto r = std::stoul(f[1]), c = std::stoul(f[2]);
    const std::size_t flat = r * entry["cols"].get<std::size_t>() + c;
    double mean = 0, sd = 0;
    std::from_chars(f[3].data(), f[3].data() + f[3].size(), mean);
    std::from_chars(f[4].data(), f[4].data() + f[4].size(), sd);
    CHECK(mean == entry["mean"][flat].get<double>());
    CHECK(sd == entry["sd"][flat].get<double>());
    CHECK(sd >= 0);
    ++rows;
  }
  // M, A (12 each), Sigma 9, Psi 16, nu 1, Psi (x) Sigma 144.
  CHECK(rows == 12 + 12 + 9 + 16 + 1 + 144);
}

TEST_CASE("format_double: shortest round trip") {
  CHECK(mvst::format_double(0.1) == "0.1");
  CHECK(mvst::format_double(4.0) == "4");
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 2000; ++i) {
    double x;
    const auto b = bits(gen);
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    const auto s = mvst::format_double(x);
    double y = 0;
    std::from_chars(s.data(), s.data() + s.size(), y);
    CHECK(std::memcmp(&x, &y, sizeof x) == 0);
  }
}

TEST_CASE("fuzzed files never crash and always raise named errors") {
  std::mt19937_64 gen(3);
  mvst::Datasetd small{2, 2, {}};
  for (int i = 0; i < 3; ++i) small.observations.push_back(fixtures::random_matrix(gen, 2, 2));
  fuzz(mvst::dataset_to_json(small).dump(), [](const mvst::Json& j) { mvst::dataset_from_json(j); },
       3000, 1);

  mvst::MvstParamsd p{Mat::Zero(2, 2), Mat::Ones(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2), 5};
  fuzz(mvst::params_to_json(p).dump(), [](const mvst::Json& j) { mvst::params_from_json(j); },
       3000, 2);

  mvst::FitConfigd c;
  fuzz(mvst::fit_config_to_json(c).dump(), [](const mvst::Json& j) { mvst::fit_config_from_json(j); },
       3000, 3);

  mvst::SimConfig s;
  s.params = p;
  fuzz(mvst::sim_config_to_json(s).dump(), [](const mvst::Json& j) { mvst::sim_config_from_json(j); },
       3000, 4);

  mvst::FitResultd r;
  r.params = p;
  r.loglik_trace = {-3.0, -2.5};
  r.iterations = 2;
  fuzz(mvst::fit_result_to_json(r).dump(), [](const mvst::Json& j) { mvst::fit_result_from_json(j); },
       3000, 5);
}
