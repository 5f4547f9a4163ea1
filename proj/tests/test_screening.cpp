#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <vector>

#include "core/dataset.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/screening.hpp"

using namespace hierlogit;

namespace {

const std::filesystem::path kFixtures =
    std::filesystem::path(HIERLOGIT_SOURCE_DIR) / "fixtures";

// Independent least-squares oracle: solve the normal equations of column k
// on [intercept, other columns] by Gaussian elimination with partial
// pivoting, then vif = 1 / (1 - R^2).
double vif_oracle(const Eigen::MatrixXd& design, int k) {
  const int n = static_cast<int>(design.rows());
  const int p = static_cast<int>(design.cols());
  std::vector<std::vector<double>> a(n, std::vector<double>(p, 0.0));
  for (int i = 0; i < n; ++i) {
    a[i][0] = 1.0;
    int out = 1;
    for (int c = 0; c < p; ++c) {
      if (c != k) a[i][out++] = design(i, c);
    }
  }
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) y[i] = design(i, k);

  std::vector<std::vector<double>> gram(p, std::vector<double>(p, 0.0));
  std::vector<double> rhs(p, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < p; ++r) {
      rhs[r] += a[i][r] * y[i];
      for (int c = 0; c < p; ++c) gram[r][c] += a[i][r] * a[i][c];
    }
  }
  for (int col = 0; col < p; ++col) {
    int pivot = col;
    for (int r = col + 1; r < p; ++r) {
      if (std::abs(gram[r][col]) > std::abs(gram[pivot][col])) pivot = r;
    }
    std::swap(gram[col], gram[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int r = col + 1; r < p; ++r) {
      const double f = gram[r][col] / gram[col][col];
      for (int c = col; c < p; ++c) gram[r][c] -= f * gram[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> beta(p, 0.0);
  for (int r = p - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int c = r + 1; c < p; ++c) acc -= gram[r][c] * beta[c];
    beta[r] = acc / gram[r][r];
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;
  double rss = 0.0, tss = 0.0;
  for (int i = 0; i < n; ++i) {
    double fit = 0.0;
    for (int c = 0; c < p; ++c) fit += a[i][c] * beta[c];
    rss += (y[i] - fit) * (y[i] - fit);
    tss += (y[i] - mean) * (y[i] - mean);
  }
  return tss / rss;  // 1 / (1 - R^2) = TSS / RSS
}

}  // namespace

TEST_CASE("orthogonal centered columns have vif exactly 1") {
  Eigen::MatrixXd design(4, 2);
  design << 1, 1, -1, 1, 1, -1, -1, -1;
  const VifReport report = compute_vif(design, {"a", "b"});
  CHECK(report.per_column[0].vif == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.per_column[1].vif == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a duplicated column is flagged as infinite for both copies") {
  Rng rng(3);
  Eigen::MatrixXd design(20, 3);
  for (int i = 0; i < 20; ++i) {
    design(i, 0) = rng.normal();
    design(i, 1) = design(i, 0);
    design(i, 2) = rng.normal();
  }
  const VifReport report = screen(design, {"a", "a_copy", "b"}, 10.0);
  CHECK(std::isinf(report.per_column[0].vif));
  CHECK(std::isinf(report.per_column[1].vif));
  CHECK_FALSE(std::isinf(report.per_column[2].vif));
  CHECK_FALSE(report.pass);
  CHECK(report.flagged == std::vector<std::string>{"a", "a_copy"});
}

TEST_CASE("vif matches the normal-equations oracle within 1e-6") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd design(40, 5);
    for (int i = 0; i < 40; ++i) {
      const double latent = rng.normal();
      design(i, 0) = latent + 0.3 * rng.normal();
      design(i, 1) = latent + 0.5 * rng.normal();
      design(i, 2) = rng.normal();
      design(i, 3) = 0.7 * design(i, 0) + rng.normal();
      design(i, 4) = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
    const VifReport report = compute_vif(design, {"a", "b", "c", "d", "e"});
    for (int k = 0; k < 5; ++k) {
      CHECK(report.per_column[k].vif ==
            doctest::Approx(vif_oracle(design, k)).epsilon(1e-6));
      CHECK(report.per_column[k].vif >= 1.0);
    }
  }
}

TEST_CASE("permuting columns permutes the report identically") {
  Rng rng(23);
  Eigen::MatrixXd design(30, 3);
  for (int i = 0; i < 30; ++i) {
    design(i, 0) = rng.normal();
    design(i, 1) = 0.8 * design(i, 0) + rng.normal();
    design(i, 2) = rng.normal();
  }
  const VifReport base = compute_vif(design, {"a", "b", "c"});
  Eigen::MatrixXd permuted(30, 3);
  permuted.col(0) = design.col(2);
  permuted.col(1) = design.col(0);
  permuted.col(2) = design.col(1);
  const VifReport moved = compute_vif(permuted, {"c", "a", "b"});
  CHECK(moved.per_column[0].vif ==
        doctest::Approx(base.per_column[2].vif).epsilon(1e-12));
  CHECK(moved.per_column[1].vif ==
        doctest::Approx(base.per_column[0].vif).epsilon(1e-12));
  CHECK(moved.per_column[2].vif ==
        doctest::Approx(base.per_column[1].vif).epsilon(1e-12));
}

TEST_CASE("scaling a column leaves every vif unchanged") {
  Rng rng(29);
  Eigen::MatrixXd design(25, 3);
  for (int i = 0; i < 25; ++i) {
    design(i, 0) = rng.normal();
    design(i, 1) = 0.5 * design(i, 0) + rng.normal();
    design(i, 2) = rng.normal();
  }
  const VifReport base = compute_vif(design, {"a", "b", "c"});
  design.col(1) *= -7.25;
  const VifReport scaled = compute_vif(design, {"a", "b", "c"});
  for (int k = 0; k < 3; ++k) {
    CHECK(scaled.per_column[k].vif ==
          doctest::Approx(base.per_column[k].vif).epsilon(1e-9));
  }
}

TEST_CASE("screen verdicts") {
  Rng rng(31);
  Eigen::MatrixXd design(50, 3);
  for (int i = 0; i < 50; ++i) {
    design(i, 0) = rng.normal();
    design(i, 1) = design(i, 0) + 0.2 * rng.normal();
    design(i, 2) = rng.normal();
  }
  const VifReport fail = screen(design, {"a", "b", "c"}, 10.0);
  CHECK(fail.per_column[0].vif > 10.0);
  CHECK_FALSE(fail.pass);
  CHECK(!fail.flagged.empty());

  const VifReport pass = screen(design, {"a", "b", "c"}, 1e6);
  CHECK(pass.pass);

  // degenerate threshold 0 fails any design since vif >= 1
  Eigen::MatrixXd ortho(4, 2);
  ortho << 1, 1, -1, 1, 1, -1, -1, -1;
  CHECK_FALSE(screen(ortho, {"a", "b"}, 0.0).pass);
}

TEST_CASE("underdetermined designs are rejected") {
  Eigen::MatrixXd square(3, 3);
  square.setRandom();
  try {
    compute_vif(square, {"a", "b", "c"});
    FAIL("expected UnderdeterminedDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnderdeterminedDesign);
  }
  Eigen::MatrixXd single(10, 1);
  single.setRandom();
  try {
    compute_vif(single, {"a"});
    FAIL("expected UnderdeterminedDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnderdeterminedDesign);
  }
}

TEST_CASE("fixture screen passes under the 10 threshold") {
  const VariableCatalog catalog =
      VariableCatalog::load(kFixtures / "catalog.json");
  auto records = load_records(kFixtures / "crashes.csv", catalog);
  const auto diseng = load_disengagements(kFixtures / "disengagements.csv");
  link_disengagements(records, diseng);
  const ClassifiedRecords classified = classify_all(records);
  std::vector<CrashRecord> pooled = classified.autonomous;
  pooled.insert(pooled.end(), classified.conventional.begin(),
                classified.conventional.end());
  const CodedTable table = build_coded_table(pooled, catalog, "pooled");

  // The screen drops the disengagement-description companions: they are
  // deterministically absent whenever disengagement is absent, so their
  // dummies predict it almost exactly.
  const std::vector<std::string> excluded = {
      "initiator", "unwanted_other_participant", "unwanted_av_movement",
      "changing_lanes", "deceleration"};
  std::vector<int> keep;
  std::vector<std::string> names;
  for (size_t i = 0; i < table.dummy_names.size(); ++i) {
    const std::string& name = table.dummy_names[i];
    const std::string variable = name.substr(0, name.find('='));
    if (std::find(excluded.begin(), excluded.end(), variable) !=
        excluded.end()) {
      continue;
    }
    keep.push_back(static_cast<int>(i));
    names.push_back(name);
  }
  Eigen::MatrixXd design(table.n(), keep.size());
  for (size_t k = 0; k < keep.size(); ++k) {
    design.col(static_cast<int>(k)) = table.dummies.col(keep[k]);
  }
  const VifReport report = screen(design, names, 10.0);
  CHECK(report.pass);
}
