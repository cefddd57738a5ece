#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfi/importance.hpp"
#include "dfi/rng.hpp"
#include "dfi/stats.hpp"

namespace {

dfi::Matrix standard_normal_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  dfi::Matrix z(n, d);
  dfi::Rng rng(seed);
  for (auto& v : z.a) v = rng.normal();
  return z;
}

std::vector<double> apply_fn(const dfi::Matrix& z, const dfi::OracleFn& fn) {
  std::vector<double> y(z.rows);
  for (std::size_t i = 0; i < z.rows; ++i) y[i] = fn(z.row(i), z.cols);
  return y;
}

double influence_mean(const std::vector<double>& h) {
  double s = 0.0;
  for (double v : h) s += v;
  return s / static_cast<double>(h.size());
}

dfi::Dataset gaussian_m1_dataset(std::size_t n, std::size_t d, double rho,
                                 std::uint64_t seed) {
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

}  // namespace

TEST_CASE("latent importance of the driving coordinate is its signal variance") {
  const std::size_t n = 4000;
  const dfi::Matrix z = standard_normal_rows(n, 3, 501);
  const auto fn = [](const double* r, std::size_t) { return r[0]; };
  const auto eta = dfi::make_oracle_regressor(fn, 3);
  const std::vector<double> y = apply_fn(z, fn);

  const auto active = dfi::latent_importance(eta, z, y, 0, 50, 77);
  CHECK(active.j == 0);
  CHECK(active.m_used == 50);
  CHECK(active.phi_hat == doctest::Approx(1.0).epsilon(0.12));
  REQUIRE(active.influence_values.size() == n);
  CHECK(std::abs(influence_mean(active.influence_values)) <= 1e-12);

  // a coordinate the function ignores scores zero up to the rounding of a
  // mean of m identical predictions
  const auto null = dfi::latent_importance(eta, z, y, 1, 50, 78);
  CHECK(std::abs(null.phi_hat) <= 1e-30);
  double worst = 0.0;
  for (double h : null.influence_values) worst = std::max(worst, std::abs(h));
  CHECK(worst <= 1e-30);
}

TEST_CASE("constant regression functions have zero importance everywhere") {
  const dfi::Matrix z = standard_normal_rows(200, 2, 11);
  const auto fn = [](const double*, std::size_t) { return 3.25; };
  const auto eta = dfi::make_oracle_regressor(fn, 2);
  std::vector<double> y(200, 3.25);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto r = dfi::latent_importance(eta, z, y, j, 20, 5 + j);
    CHECK(std::abs(r.phi_hat) <= 1e-30);
  }
}

TEST_CASE("interaction terms spread importance across both coordinates") {
  const std::size_t n = 6000;
  const dfi::Matrix z = standard_normal_rows(n, 2, 321);
  const auto fn = [](const double* r, std::size_t) { return r[0] * r[1]; };
  const auto eta = dfi::make_oracle_regressor(fn, 2);
  const std::vector<double> y = apply_fn(z, fn);

  for (std::size_t j = 0; j < 2; ++j) {
    const auto loco =
        dfi::latent_importance(eta, z, y, j, 50, 900 + j, dfi::ResampleMode::draws,
                               dfi::LatentEstimator::loco_type);
    CHECK(loco.phi_hat == doctest::Approx(1.0).epsilon(0.15));
    const auto cpi =
        dfi::latent_importance(eta, z, y, j, 50, 900 + j, dfi::ResampleMode::draws,
                               dfi::LatentEstimator::cpi_type);
    CHECK(cpi.phi_hat == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("larger m shrinks the resampling bias") {
  const std::size_t n = 20000;
  const dfi::Matrix z = standard_normal_rows(n, 2, 808);
  const auto fn = [](const double* r, std::size_t) { return r[0]; };
  const auto eta = dfi::make_oracle_regressor(fn, 2);
  const std::vector<double> y = apply_fn(z, fn);

  const auto coarse = dfi::latent_importance(eta, z, y, 0, 4, 1);
  const auto fine = dfi::latent_importance(eta, z, y, 0, 400, 2);
  // upward bias is phi/m for a linear eta: about 0.25 vs 0.0025 here
  CHECK(coarse.phi_hat > fine.phi_hat + 0.1);
  CHECK(fine.phi_hat == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("importance is invariant to a common shift of y and eta") {
  const std::size_t n = 500;
  const dfi::Matrix z = standard_normal_rows(n, 2, 99);
  const auto fn = [](const double* r, std::size_t) { return 2.0 * r[0]; };
  const auto shifted = [](const double* r, std::size_t) { return 2.0 * r[0] + 100.0; };
  std::vector<double> y = apply_fn(z, fn);
  std::vector<double> y2 = y;
  for (auto& v : y2) v += 100.0;

  const auto base = dfi::latent_importance(dfi::make_oracle_regressor(fn, 2), z, y, 0,
                                           30, 1234);
  const auto moved = dfi::latent_importance(dfi::make_oracle_regressor(shifted, 2), z,
                                            y2, 0, 30, 1234);
  CHECK(base.phi_hat == doctest::Approx(moved.phi_hat).epsilon(1e-12));
}

TEST_CASE("full-support resampling matches exhaustive enumeration on a grid") {
  // all 27 points of {-1, 0, 1}^3, one per row
  dfi::Matrix z(27, 3);
  std::size_t r = 0;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        z(r, 0) = a;
        z(r, 1) = b;
        z(r, 2) = c;
        ++r;
      }
  const auto fn = [](const double* p, std::size_t) { return p[0] + 2.0 * p[1] * p[2]; };
  const auto eta = dfi::make_oracle_regressor(fn, 3);
  const std::vector<double> y = apply_fn(z, fn);

  const double expected[3] = {2.0 / 3.0, 16.0 / 9.0, 16.0 / 9.0};
  for (std::size_t j = 0; j < 3; ++j) {
    const auto res = dfi::latent_importance(eta, z, y, j, 0, 0,
                                            dfi::ResampleMode::full_support);
    CHECK(res.m_used == 27);

    // brute force: replace column j by every grid value, average the kernel
    double phi = 0.0;
    std::vector<double> row(3);
    for (std::size_t i = 0; i < 27; ++i) {
      double bar = 0.0;
      for (std::size_t q = 0; q < 27; ++q) {
        row[0] = z(i, 0);
        row[1] = z(i, 1);
        row[2] = z(i, 2);
        row[j] = z(q, j);
        bar += fn(row.data(), 3);
      }
      bar /= 27.0;
      const double pred = fn(z.row(i), 3);
      const double delta = pred - bar;
      phi += 2.0 * (y[i] - pred) * delta + delta * delta;
    }
    phi /= 27.0;
    CHECK(std::abs(res.phi_hat - phi) <= 1e-12);
    CHECK(res.phi_hat == doctest::Approx(expected[j]).epsilon(1e-12));
  }
}

TEST_CASE("attribution mixes latent values through squared weights") {
  // m1-style closed form at rho = 0.8: latent (20, 5) -> attributed (17, 8)
  const double a2 = 0.8, b2 = 0.2;
  dfi::Matrix l(2, 2);
  l(0, 0) = l(1, 1) = std::sqrt(a2);
  l(0, 1) = l(1, 0) = std::sqrt(b2);
  dfi::LinearTransport t;
  t.l = l;
  t.l_inv = dfi::Matrix::identity(2);
  const auto w = dfi::attribution_weights(t);

  std::vector<dfi::LatentImportanceResult> lat(2);
  lat[0].j = 0;
  lat[0].phi_hat = 25.0 * a2;
  lat[0].influence_values.assign(10, 0.0);
  lat[1].j = 1;
  lat[1].phi_hat = 25.0 * b2;
  lat[1].influence_values.assign(10, 0.0);

  const auto attr = dfi::attribute(lat, w);
  REQUIRE(attr.size() == 2);
  CHECK(attr[0].phi_hat == doctest::Approx(17.0).epsilon(1e-12));
  CHECK(attr[1].phi_hat == doctest::Approx(8.0).epsilon(1e-12));

  // weighted latent total equals the attributed total: the row sums of w
  // are the latent weights
  double latent_total = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    double cj = w.w(j, 0) + w.w(j, 1);
    latent_total += cj * lat[j].phi_hat;
  }
  CHECK(latent_total == doctest::Approx(attr[0].phi_hat + attr[1].phi_hat).epsilon(1e-12));
}

TEST_CASE("attribution carries influence values through the same weights") {
  dfi::Rng rng(5150);
  dfi::Matrix l(3, 3);
  for (auto& v : l.a) v = rng.normal();
  dfi::LinearTransport t;
  t.l = l;
  t.l_inv = dfi::Matrix::identity(3);
  const auto w = dfi::attribution_weights(t);

  const std::size_t n = 40;
  std::vector<dfi::LatentImportanceResult> lat(3);
  for (std::size_t j = 0; j < 3; ++j) {
    lat[j].j = j;
    lat[j].influence_values.resize(n);
    double s = 0.0;
    for (auto& v : lat[j].influence_values) {
      v = rng.normal();
      s += v;
    }
    for (auto& v : lat[j].influence_values) v -= s / n;  // centered input
    lat[j].phi_hat = rng.uniform01();
  }
  const auto attr = dfi::attribute(lat, w);
  for (std::size_t lcol = 0; lcol < 3; ++lcol) {
    REQUIRE(attr[lcol].influence_values.size() == n);
    CHECK(std::abs(influence_mean(attr[lcol].influence_values)) <= 1e-12);
    // spot-check one row against the direct weighted combination
    double expect = 0.0;
    for (std::size_t j = 0; j < 3; ++j)
      expect += w.w(j, lcol) * (lat[j].influence_values[7] + lat[j].phi_hat);
    expect -= attr[lcol].phi_hat;
    CHECK(attr[lcol].influence_values[7] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("wald inference from influence values") {
  // influence sample with known variance: se = sqrt(var / n)
  std::vector<double> h = {1.0, -1.0, 2.0, -2.0, 0.0};
  const double var = dfi::sample_variance(h);
  dfi::InferenceSettings s;
  s.alpha = 0.1;
  s.inflate_near_null = false;
  const auto e = dfi::infer("t", 3.0, h, s);
  const double se = std::sqrt(var / 5.0);
  CHECK(e.std_error == doctest::Approx(se).epsilon(1e-14));
  const double q = dfi::normal_quantile(0.95);
  CHECK(e.ci_low == doctest::Approx(3.0 - q * se).epsilon(1e-14));
  CHECK(e.ci_high == doctest::Approx(3.0 + q * se).epsilon(1e-14));
  CHECK(e.z_score == doctest::Approx(3.0 / se).epsilon(1e-14));
  CHECK(e.p_value == doctest::Approx(1.0 - dfi::normal_cdf(e.z_score)).epsilon(1e-14));
}

TEST_CASE("variance inflation keeps the null test statistic finite") {
  // all-zero influence with a zero estimate: inflation turns 0/0 into z = 0
  std::vector<double> zero(100, 0.0);
  dfi::InferenceSettings s;
  s.alpha = 0.05;
  s.inflate_near_null = true;
  const auto e = dfi::infer("null", 0.0, zero, s);
  CHECK(e.std_error == 0.0);
  CHECK(e.z_score == 0.0);
  CHECK(e.p_value == doctest::Approx(0.5).epsilon(1e-14));
  // the inflation adds n^{-1/2} / z_{1-alpha} to the variance
  const double infl = 1.0 / (std::sqrt(100.0) * dfi::normal_quantile(0.95));
  std::vector<double> h(100);
  dfi::Rng rng(4);
  double sum = 0.0;
  for (auto& v : h) {
    v = rng.normal();
    sum += v;
  }
  for (auto& v : h) v -= sum / 100.0;
  const auto f = dfi::infer("x", 0.7, h, s);
  const double se = std::sqrt(dfi::sample_variance(h) / 100.0);
  CHECK(f.std_error == doctest::Approx(se).epsilon(1e-14));
  CHECK(f.z_score == doctest::Approx(0.7 / std::sqrt(se * se + infl)).epsilon(1e-13));
  // the CI widens with the inflated scale while std_error stays raw
  CHECK(f.ci_high - f.ci_low ==
        doctest::Approx(2.0 * dfi::normal_quantile(0.975) * std::sqrt(se * se + infl))
            .epsilon(1e-13));

  // without inflation the degenerate case is a hard zero with p = 1
  s.inflate_near_null = false;
  const auto g = dfi::infer("null", 0.0, zero, s);
  CHECK(g.z_score == 0.0);
  CHECK(g.p_value == 1.0);
}

TEST_CASE("inference rejects invalid settings") {
  std::vector<double> h = {0.1, -0.1, 0.2, -0.2};
  dfi::InferenceSettings s;
  s.alpha = 0.0;
  CHECK_THROWS_AS(dfi::infer("x", 1.0, h, s), std::invalid_argument);
  s.alpha = 1.0;
  CHECK_THROWS_AS(dfi::infer("x", 1.0, h, s), std::invalid_argument);
  s.alpha = 0.1;
  CHECK_THROWS_AS(dfi::infer("x", 1.0, std::vector<double>{1.0}, s),
                  std::invalid_argument);
}

TEST_CASE("group importance adds estimates and influence rows") {
  dfi::InferenceSettings s;
  std::vector<dfi::ImportanceEstimate> attributed(3);
  dfi::Rng rng(31);
  for (std::size_t l = 0; l < 3; ++l) {
    attributed[l].name = "x" + std::to_string(l + 1);
    attributed[l].estimate = static_cast<double>(l + 1);
    attributed[l].influence_values.resize(50);
    double sum = 0.0;
    for (auto& v : attributed[l].influence_values) {
      v = rng.normal();
      sum += v;
    }
    for (auto& v : attributed[l].influence_values) v -= sum / 50.0;
  }

  const auto single = dfi::group_importance("solo", attributed, {1}, s);
  CHECK(single.estimate == attributed[1].estimate);

  const auto pair = dfi::group_importance("pair", attributed, {0, 2}, s);
  CHECK(pair.estimate == doctest::Approx(4.0).epsilon(1e-15));
  const auto full = dfi::group_importance("all", attributed, {0, 1, 2}, s);
  CHECK(full.estimate == doctest::Approx(6.0).epsilon(1e-15));

  // group influence is the row sum, so variances combine with covariance
  std::vector<double> summed(50);
  for (std::size_t i = 0; i < 50; ++i)
    summed[i] = attributed[0].influence_values[i] + attributed[2].influence_values[i];
  CHECK(pair.std_error ==
        doctest::Approx(std::sqrt(dfi::sample_variance(summed) / 50.0)).epsilon(1e-13));

  CHECK_THROWS_AS(dfi::group_importance("empty", attributed, {}, s),
                  std::invalid_argument);
  CHECK_THROWS_AS(dfi::group_importance("oob", attributed, {3}, s),
                  std::invalid_argument);
}

TEST_CASE("run_dfi pools folds and satisfies the importance decomposition") {
  const dfi::Dataset ds = gaussian_m1_dataset(600, 4, 0.5, 2024);
  dfi::RunConfig rc;
  rc.seed = 15;
  rc.regressor.kind = dfi::RegressorKind::oracle;
  rc.regressor.oracle_fn = "m1_mu";
  rc.m_resamples = 30;

  for (auto kind : {dfi::TransportKind::bures_wasserstein, dfi::TransportKind::triangular}) {
    rc.transport_kind = kind;
    const auto rep = dfi::run_dfi(ds, rc);
    REQUIRE(rep.latent.size() == 4);
    REQUIRE(rep.attributed.size() == 4);
    REQUIRE(rep.sigma_diag.size() == 4);
    CHECK(rep.attributed[0].name == "x1");
    CHECK(rep.latent[0].name == "z1");

    double weighted = 0.0;
    for (std::size_t j = 0; j < 4; ++j)
      weighted += rep.sigma_diag[j] * rep.latent[j].estimate;
    CHECK(std::abs(weighted - rep.total_attributed) <=
          1e-10 * std::max(1.0, std::abs(rep.total_attributed)));

    double total = 0.0;
    for (const auto& e : rep.attributed) total += e.estimate;
    CHECK(total == doctest::Approx(rep.total_attributed).epsilon(1e-12));

    for (const auto& e : rep.latent) {
      REQUIRE(e.influence_values.size() == 600);
      CHECK(std::abs(influence_mean(e.influence_values)) <=
            1e-10 * std::max(1.0, std::abs(e.estimate)));
    }
    for (const auto& e : rep.attributed)
      CHECK(std::abs(influence_mean(e.influence_values)) <=
            1e-10 * std::max(1.0, std::abs(e.estimate)));

    // x1 dominates; the late columns are null
    CHECK(rep.attributed[0].estimate > 10.0);
    CHECK(std::abs(rep.attributed[3].estimate) < 2.0);
  }
}

TEST_CASE("run_dfi is deterministic in the seed") {
  const dfi::Dataset ds = gaussian_m1_dataset(200, 3, 0.0, 7);
  dfi::RunConfig rc;
  rc.seed = 3;
  rc.regressor.kind = dfi::RegressorKind::random_forest;
  rc.regressor.n_trees = 30;
  rc.m_resamples = 10;
  const auto a = dfi::run_dfi(ds, rc);
  const auto b = dfi::run_dfi(ds, rc);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(a.attributed[l].estimate == b.attributed[l].estimate);
    CHECK(a.attributed[l].std_error == b.attributed[l].std_error);
  }
  rc.seed = 4;
  const auto c = dfi::run_dfi(ds, rc);
  CHECK(a.attributed[0].estimate != c.attributed[0].estimate);
}

TEST_CASE("run_dfi handles a single feature") {
  dfi::Dataset ds;
  ds.feature_names = {"x1"};
  ds.x = dfi::Matrix(150, 1);
  ds.y.resize(150);
  dfi::Rng rng(88);
  for (std::size_t i = 0; i < 150; ++i) {
    ds.x(i, 0) = 2.0 * rng.normal();
    ds.y[i] = 3.0 * ds.x(i, 0) + 0.1 * rng.normal();
  }
  dfi::RunConfig rc;
  rc.seed = 5;
  rc.regressor.kind = dfi::RegressorKind::random_forest;
  rc.regressor.n_trees = 40;
  const auto rep = dfi::run_dfi(ds, rc);
  REQUIRE(rep.attributed.size() == 1);
  CHECK(rep.attributed[0].estimate > 5.0);  // signal variance is 36
  CHECK(rep.total_attributed == doctest::Approx(rep.attributed[0].estimate));
}

TEST_CASE("run_dfi names the dependent block on singular covariance") {
  dfi::Dataset ds;
  ds.feature_names = {"x1", "x2", "x3"};
  ds.x = dfi::Matrix(100, 3);
  ds.y.resize(100);
  dfi::Rng rng(6);
  for (std::size_t i = 0; i < 100; ++i) {
    ds.x(i, 0) = rng.normal();
    ds.x(i, 1) = ds.x(i, 0);  // exact duplicate
    ds.x(i, 2) = rng.normal();
    ds.y[i] = ds.x(i, 0) + rng.normal();
  }
  dfi::RunConfig rc;
  rc.seed = 1;
  std::string msg;
  try {
    dfi::run_dfi(ds, rc);
  } catch (const std::runtime_error& e) {
    msg = e.what();
  }
  CHECK(msg.find("singular or near-singular covariance") != std::string::npos);
  CHECK(msg.find("dependent feature block") != std::string::npos);
  CHECK(msg.find("x1") != std::string::npos);
  CHECK(msg.find("x2") != std::string::npos);
  CHECK(msg.find("x3") == std::string::npos);
}

TEST_CASE("run_dfi validates its configuration") {
  const dfi::Dataset ds = gaussian_m1_dataset(100, 3, 0.0, 9);
  dfi::RunConfig rc;
  rc.n_folds = 1;
  CHECK_THROWS_AS(dfi::run_dfi(ds, rc), std::invalid_argument);
  rc.n_folds = 2;
  rc.m_resamples = 0;
  CHECK_THROWS_AS(dfi::run_dfi(ds, rc), std::invalid_argument);
  rc.m_resamples = 50;
  rc.alpha = 0.0;
  CHECK_THROWS_AS(dfi::run_dfi(ds, rc), std::invalid_argument);
  rc.alpha = 0.1;
  rc.regressor.kind = dfi::RegressorKind::oracle;  // no oracle_fn named
  CHECK_THROWS_AS(dfi::run_dfi(ds, rc), std::invalid_argument);
}
