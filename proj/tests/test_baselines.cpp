#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfi/baselines.hpp"
#include "dfi/importance.hpp"
#include "dfi/rng.hpp"

namespace {

dfi::Dataset m1_dataset(std::size_t n, std::size_t d, double rho, std::uint64_t seed) {
  dfi::Dataset ds;
  for (std::size_t j = 0; j < d; ++j)
    ds.feature_names.push_back("x" + std::to_string(j + 1));
  ds.x = dfi::Matrix(n, d);
  ds.y.resize(n);
  dfi::Rng rng(seed);
  const double b = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    ds.x(i, 0) = rng.normal();
    ds.x(i, 1) = rho * ds.x(i, 0) + b * rng.normal();
    for (std::size_t j = 2; j < d; ++j) ds.x(i, j) = rng.normal();
    ds.y[i] = 5.0 * ds.x(i, 0) + rng.normal();
  }
  return ds;
}

dfi::RunConfig oracle_config(std::uint64_t seed) {
  dfi::RunConfig rc;
  rc.seed = seed;
  rc.regressor.kind = dfi::RegressorKind::oracle;
  rc.regressor.oracle_fn = "m1_mu";
  return rc;
}

double influence_mean(const std::vector<double>& h) {
  double s = 0.0;
  for (double v : h) s += v;
  return s / static_cast<double>(h.size());
}

}  // namespace

TEST_CASE("loco with an oracle recovers the conditional-variance loss gap") {
  // psi_1 = 25 * (1 - rho^2) for the linear model, plus an O(1/m) upward bias
  const dfi::Dataset correlated = m1_dataset(5000, 4, 0.8, 301);
  const auto loco = dfi::loco_importance(correlated, oracle_config(17));
  REQUIRE(loco.estimates.size() == 4);
  CHECK(loco.method == dfi::BaselineMethod::loco);
  CHECK(loco.estimates[0].name == "x1");
  CHECK(loco.estimates[0].estimate == doctest::Approx(9.0).epsilon(0.12));

  const dfi::Dataset indep = m1_dataset(5000, 4, 0.0, 302);
  const auto loco0 = dfi::loco_importance(indep, oracle_config(18));
  CHECK(loco0.estimates[0].estimate == doctest::Approx(25.0).epsilon(0.08));

  // features the regression function ignores score near zero
  for (std::size_t j = 1; j < 4; ++j)
    CHECK(std::abs(loco0.estimates[j].estimate) < 0.5);
}

TEST_CASE("loco and cpi agree on the linear oracle") {
  const dfi::Dataset ds = m1_dataset(5000, 4, 0.4, 88);
  const auto loco = dfi::loco_importance(ds, oracle_config(5));
  const auto cpi = dfi::cpi_importance(ds, oracle_config(5));
  // both target 25 * (1 - rho^2) = 21
  CHECK(std::abs(loco.estimates[0].estimate - cpi.estimates[0].estimate) <=
        3.0 * 25.0 / std::sqrt(5000.0));
  CHECK(cpi.estimates[0].estimate == doctest::Approx(21.0).epsilon(0.12));
}

TEST_CASE("cpi matches the disentangled estimate when features are independent") {
  const dfi::Dataset ds = m1_dataset(4000, 4, 0.0, 55);
  dfi::RunConfig rc = oracle_config(9);
  const auto cpi = dfi::cpi_importance(ds, rc);
  const auto rep = dfi::run_dfi(ds, rc);
  // with an identity covariance the latent coordinates are the features
  CHECK(std::abs(cpi.estimates[0].estimate - rep.attributed[0].estimate) < 1.5);
}

TEST_CASE("baseline influence values are centered") {
  const dfi::Dataset ds = m1_dataset(400, 3, 0.3, 77);
  dfi::RunConfig rc = oracle_config(21);
  rc.m_resamples = 20;
  for (const auto& result :
       {dfi::loco_importance(ds, rc), dfi::cpi_importance(ds, rc)}) {
    for (const auto& e : result.estimates) {
      REQUIRE(e.influence_values.size() == 400);
      CHECK(std::abs(influence_mean(e.influence_values)) <=
            1e-10 * std::max(1.0, std::abs(e.estimate)));
    }
  }
}

TEST_CASE("baselines run with fitted regressors") {
  const dfi::Dataset ds = m1_dataset(300, 3, 0.0, 99);
  dfi::RunConfig rc;
  rc.seed = 7;
  rc.regressor.kind = dfi::RegressorKind::random_forest;
  rc.regressor.n_trees = 40;
  rc.m_resamples = 10;
  const auto loco = dfi::loco_importance(ds, rc);
  const auto cpi = dfi::cpi_importance(ds, rc);
  // the forest finds the strong signal; exact values are loose here
  CHECK(loco.estimates[0].estimate > 2.0);
  CHECK(cpi.estimates[0].estimate > 2.0);
  CHECK(loco.estimates[0].estimate > std::abs(loco.estimates[2].estimate));
  CHECK(cpi.estimates[0].estimate > std::abs(cpi.estimates[2].estimate));

  // deterministic in the seed
  const auto again = dfi::loco_importance(ds, rc);
  CHECK(again.estimates[0].estimate == loco.estimates[0].estimate);
}

TEST_CASE("duplicated features zero the raw baselines but break the transport") {
  dfi::Dataset ds;
  ds.feature_names = {"x1", "x2", "x3"};
  ds.x = dfi::Matrix(600, 3);
  ds.y.resize(600);
  dfi::Rng rng(13);
  for (std::size_t i = 0; i < 600; ++i) {
    ds.x(i, 0) = rng.normal();
    ds.x(i, 1) = ds.x(i, 0);  // exact copy of the signal feature
    ds.x(i, 2) = rng.normal();
    ds.y[i] = 5.0 * ds.x(i, 0) + rng.normal();
  }
  dfi::RunConfig rc = oracle_config(3);

  // the conditional distribution of x1 given its copy is degenerate, so both
  // raw-space baselines report (near) zero importance for the pair
  const auto loco = dfi::loco_importance(ds, rc);
  CHECK(std::abs(loco.estimates[0].estimate) < 1e-10);
  const auto cpi = dfi::cpi_importance(ds, rc);
  CHECK(std::abs(cpi.estimates[0].estimate) < 1e-10);

  // the whitening pipeline refuses the same data instead of silently
  // splitting the importance
  CHECK_THROWS_AS(dfi::run_dfi(ds, rc), std::runtime_error);
}

TEST_CASE("baselines validate their configuration") {
  const dfi::Dataset ds = m1_dataset(100, 3, 0.0, 1);
  dfi::RunConfig rc;
  rc.n_folds = 1;
  CHECK_THROWS_AS(dfi::loco_importance(ds, rc), std::invalid_argument);
  rc.n_folds = 2;
  rc.m_resamples = 0;
  CHECK_THROWS_AS(dfi::cpi_importance(ds, rc), std::invalid_argument);
  rc.m_resamples = 10;
  rc.regressor.kind = dfi::RegressorKind::oracle;  // no oracle_fn registered
  CHECK_THROWS_AS(dfi::loco_importance(ds, rc), std::invalid_argument);
}

TEST_CASE("baseline names follow the method") {
  CHECK(dfi::to_string(dfi::BaselineMethod::loco) == "loco");
  CHECK(dfi::to_string(dfi::BaselineMethod::cpi) == "cpi");
}
