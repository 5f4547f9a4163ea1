#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

using namespace hierlogit;

TEST_CASE("splitmix64 stream is deterministic and chain seeds distinct") {
  std::uint64_t s1 = 42, s2 = 42;
  CHECK(splitmix64_next(s1) == splitmix64_next(s2));
  CHECK(s1 == s2);

  std::set<std::uint64_t> seeds;
  for (int c = 0; c < 16; ++c) seeds.insert(chain_seed(97, c));
  CHECK(seeds.size() == 16);
  CHECK(chain_seed(97, 3) == chain_seed(97, 3));
  CHECK(chain_seed(97, 3) != chain_seed(98, 3));
}

TEST_CASE("rng reproducibility and ranges") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng r(11);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.uniform_open();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("normal draws have the right first two moments") {
  Rng r(1234);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("csv round-trips awkward fields") {
  const std::vector<std::string> header = {"a", "b,c", "d\"e"};
  const std::vector<std::vector<std::string>> rows = {
      {"plain", "with,comma", "with\"quote"},
      {"line\nbreak", "", "trailing space "},
  };
  const auto path = std::filesystem::temp_directory_path() /
                    "hierlogit_csv_test.csv";
  write_csv(path, header, rows, {"comment one", "comment two"});
  const CsvTable table = read_csv(path);
  CHECK(table.header == header);
  CHECK(table.rows == rows);
  CHECK(table.comments == std::vector<std::string>{"comment one",
                                                   "comment two"});
  CHECK(table.column("b,c") == 1);
  CHECK(table.column("missing") == -1);
  std::filesystem::remove(path);
}

TEST_CASE("csv rejects ragged rows and unterminated quotes") {
  CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n\"oops,2\n"), Error);
}

TEST_CASE("type-7 quantiles interpolate order statistics") {
  std::vector<double> values = {4.0, 1.0, 3.0, 2.0};
  CHECK(quantile_type7(values, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_type7(values, 0.0) == doctest::Approx(1.0));
  CHECK(quantile_type7(values, 1.0) == doctest::Approx(4.0));
  CHECK(quantile_type7(values, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_type7(std::vector<double>{5.0}, 0.3) ==
        doctest::Approx(5.0));
}

TEST_CASE("effective sample size is near n for iid draws") {
  Rng r(5);
  Eigen::VectorXd draws(5000);
  for (int i = 0; i < draws.size(); ++i) draws(i) = r.normal();
  const double ess = effective_sample_size(draws);
  CHECK(ess > 2500.0);
  CHECK(ess <= 5000.0);
}

TEST_CASE("effective sample size shrinks for autocorrelated draws") {
  Rng r(6);
  Eigen::VectorXd draws(5000);
  double x = 0.0;
  for (int i = 0; i < draws.size(); ++i) {
    x = 0.95 * x + r.normal();
    draws(i) = x;
  }
  CHECK(effective_sample_size(draws) < 1000.0);
}
