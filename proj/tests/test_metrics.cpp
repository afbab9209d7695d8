#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "songpop/metrics.hpp"
#include "support/oracles.hpp"

using namespace songpop;
using namespace songpop::testing;

namespace {

std::vector<double> draw(Rng& rng, std::size_t n, bool ties) {
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? static_cast<double>(rng.below(6)) : rng.normal();
  return v;
}

}  // namespace

TEST_CASE("aggregate_song_predictions") {
  MatrixXd one(2, 1);
  one << 40, 3;
  CHECK(aggregate_song_predictions(one) == VectorXd(one.col(0)));
  MatrixXd two(1, 2);
  two << 40, 60;
  CHECK(aggregate_song_predictions(two)(0) == 50.0);

  Rng rng(2);
  MatrixXd seven(7, 7);
  for (Eigen::Index i = 0; i < seven.size(); ++i) seven.data()[i] = rng.uniform(0, 100);
  const VectorXd agg = aggregate_song_predictions(seven);
  for (int t = 0; t < 7; ++t) {
    double s = 0;
    for (int k = 0; k < 7; ++k) s += seven(t, k);
    CHECK(std::abs(agg(t) - s / 7) < 1e-12);
  }
  CHECK_THROWS_AS(aggregate_song_predictions(MatrixXd(3, 0)), ValidationError);
}

TEST_CASE("mse_mae examples") {
  const std::vector<double> p = {0, 0}, t = {3, 4};
  const auto e = mse_mae(p, t);
  CHECK(e.mse == 12.5);
  CHECK(e.mae == 3.5);
  const auto z = mse_mae(t, t);
  CHECK(z.mse == 0.0);
  CHECK(z.mae == 0.0);
  const std::vector<double> shifted = {5.5, 6.5};
  const auto s = mse_mae(shifted, t);
  CHECK(s.mse == doctest::Approx(6.25));
  CHECK(s.mae == doctest::Approx(2.5));
  CHECK_THROWS_AS(mse_mae(p, std::vector<double>{1}), DimensionError);
}

TEST_CASE("pearson examples and errors") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y, z;
  for (double v : x) {
    y.push_back(2 * v + 1);
    z.push_back(-v);
  }
  CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, z) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(pearson(x, std::vector<double>(5, 2.0)), DomainError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
}

TEST_CASE("spearman examples") {
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) ==
        doctest::Approx(0.8).epsilon(1e-15));
  const std::vector<double> x = {0.5, 1.5, 2.5, 9.0};
  std::vector<double> cubed;
  for (double v : x) cubed.push_back(v * v * v);
  CHECK(spearman(x, cubed) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}) ==
        doctest::Approx(oracle_pearson({1.5, 1.5, 3}, {1, 2, 3})).epsilon(1e-15));
}

TEST_CASE("auc and f1 examples") {
  const std::vector<int> labels = {0, 0, 1, 1};
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, labels) == 1.0);
  CHECK(auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, labels) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), DomainError);

  CHECK(f1(labels, labels) == 1.0);
  CHECK(f1(std::vector<int>{0, 0, 0, 0}, labels) == 0.0);
  // TP=2, FP=1, FN=1
  CHECK(f1(std::vector<int>{1, 1, 1, 0, 0}, std::vector<int>{1, 1, 0, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK(macro_f1(labels, labels) == 1.0);
}

TEST_CASE("correlation and auc against brute-force oracles") {
  Rng rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    const bool ties = trial % 2 == 1;
    const auto x = draw(rng, n, ties);
    const auto y = draw(rng, n, ties);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.below(2));
    labels[0] = 0;
    labels[1] = 1;
    const auto rx = oracle_ranks(x), ry = oracle_ranks(y);
    auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    const bool defined = !constant(x) && !constant(y);
    if (defined) {
      worst = std::max(worst, std::abs(pearson(x, y) - oracle_pearson(x, y)));
      worst = std::max(worst, std::abs(spearman(x, y) - oracle_pearson(rx, ry)));
    } else {
      CHECK_THROWS_AS(spearman(x, y), DomainError);
    }
    worst = std::max(worst, std::abs(auc(x, labels) - oracle_auc(x, labels)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("metric invariances") {
  Rng rng(9);
  const auto x = draw(rng, 100, false);
  const auto y = draw(rng, 100, false);
  std::vector<int> labels(100);
  for (auto& l : labels) l = static_cast<int>(rng.below(2));
  std::vector<double> affine, monotone, negated;
  for (double v : x) {
    affine.push_back(3.0 * v + 7.0);
    monotone.push_back(std::exp(v));
    negated.push_back(-2.0 * v);
  }
  CHECK(std::abs(pearson(affine, y) - pearson(x, y)) < 1e-12);
  CHECK(std::abs(pearson(negated, y) + pearson(x, y)) < 1e-12);
  CHECK(spearman(monotone, y) == doctest::Approx(spearman(x, y)).epsilon(1e-14));
  CHECK(auc(monotone, labels) == auc(x, labels));
}

TEST_CASE("regression_metrics leaves undefined correlations empty") {
  const std::vector<double> p(4, 50.0), t = {10, 20, 30, 40};
  const RegressionMetrics m = regression_metrics(p, t);
  CHECK_FALSE(m.pearson.has_value());
  CHECK_FALSE(m.spearman.has_value());
  CHECK(m.mae == 25.0);
  const RegressionMetrics ok = regression_metrics(t, t);
  CHECK(*ok.pearson == doctest::Approx(1.0));
  CHECK(*ok.spearman == doctest::Approx(1.0));
}
