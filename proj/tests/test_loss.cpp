#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "xrt/loss.hpp"

using namespace xrt;

namespace {

// Scalar oracles written independently of the library templates.
double oracle_cross_entropy(const std::vector<double>& target, const std::vector<double>& predicted) {
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i)
    if (target[i] > 0.0) sum -= target[i] * std::log(predicted[i]);
  return sum;
}

double oracle_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_SUITE("loss") {
  TEST_CASE("aggregate posterior sums then normalizes") {
    Eigen::MatrixXd rows(2, 2);
    rows << 0.9, 0.1, 0.5, 0.5;
    const auto post = aggregate_posterior(rows);
    CHECK(post.aggregate[0] == doctest::Approx(1.4));
    CHECK(post.aggregate[1] == doctest::Approx(0.6));
    CHECK(post.normalized[0] == doctest::Approx(0.7));
    CHECK(post.normalized[1] == doctest::Approx(0.3));
  }

  TEST_CASE("aggregate posterior of one row or repeated rows is the row") {
    const Eigen::RowVector3d r(0.2, 0.5, 0.3);
    Eigen::MatrixXd one = r;
    CHECK((aggregate_posterior(one).normalized - r.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    Eigen::MatrixXd many = r.replicate(7, 1);
    CHECK((aggregate_posterior(many).normalized - r.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("aggregate posterior rejects empty input") {
    Eigen::MatrixXd none(0, 3);
    CHECK_THROWS_AS(aggregate_posterior(none), Error);
  }

  TEST_CASE("xr loss values") {
    CHECK(xr_loss(vec({1, 0}), vec({1, 0})) == 0.0);
    CHECK(xr_loss(vec({0.5, 0.5}), vec({0.5, 0.5})) == doctest::Approx(std::log(2.0)));
    const double expected = oracle_cross_entropy({0.7, 0.2, 0.1}, {0.6, 0.3, 0.1});
    CHECK(expected == doctest::Approx(0.8286).epsilon(1e-4));
    CHECK(xr_loss(vec({0.7, 0.2, 0.1}), vec({0.6, 0.3, 0.1})) == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("xr loss clamps zero predictions") {
    const double l = xr_loss(vec({0.5, 0.5}), vec({1.0, 0.0}));
    CHECK(std::isfinite(l));
    CHECK(l == doctest::Approx(-0.5 * std::log(kProbabilityFloor)));
  }

  TEST_CASE("batched xr loss composes aggregation and xr loss") {
    Eigen::MatrixXd rows(3, 2);
    rows << 0.9, 0.1, 0.4, 0.6, 0.7, 0.3;
    const double q0 = 0.9 + 0.4 + 0.7, q1 = 0.1 + 0.6 + 0.3;
    const double expected = oracle_cross_entropy({0.7, 0.3}, {q0 / (q0 + q1), q1 / (q0 + q1)});
    CHECK(batched_xr_loss(vec({0.7, 0.3}), rows) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(batched_xr_loss(vec({0.7, 0.3}), rows) ==
          doctest::Approx(xr_loss(vec({0.7, 0.3}), aggregate_posterior(rows).normalized)).epsilon(1e-15));
  }

  TEST_CASE("batched xr loss of one row with a one-hot target is cross-entropy") {
    Eigen::MatrixXd row(1, 3);
    row << 0.2, 0.5, 0.3;
    const std::vector<LabelIndex> gold{1};
    CHECK(batched_xr_loss(vec({0, 1, 0}), row) == doctest::Approx(cross_entropy_loss(gold, row)).epsilon(1e-15));
    CHECK(batched_xr_loss(vec({0, 1, 0}), row) == doctest::Approx(-std::log(0.5)));
  }

  TEST_CASE("cross entropy values") {
    Eigen::MatrixXd perfect(2, 2);
    perfect << 1, 0, 0, 1;
    const std::vector<LabelIndex> g01{0, 1};
    CHECK(cross_entropy_loss(g01, perfect) == 0.0);
    Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(1, 3, 1.0 / 3.0);
    const std::vector<LabelIndex> g0{0};
    CHECK(cross_entropy_loss(g0, uniform) == doctest::Approx(std::log(3.0)));
    Eigen::MatrixXd rows(2, 2);
    rows << 0.8, 0.2, 0.4, 0.6;
    const double expected = -(std::log(0.8) + std::log(0.6));
    CHECK(expected == doctest::Approx(0.7340).epsilon(1e-4));
    CHECK(cross_entropy_loss(g01, rows) == doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(cross_entropy_loss(g0, rows), Error);
  }

  TEST_CASE("kl divergence values") {
    CHECK(kl_divergence(vec({0.3, 0.7}), vec({0.3, 0.7})) == 0.0);
    CHECK(kl_divergence(vec({1, 0}), vec({0.5, 0.5})) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("distribution overloads agree with the vector forms") {
    const auto t = Distribution::from(vec({0.7, 0.2, 0.1}));
    const auto p = Distribution::from(vec({0.6, 0.3, 0.1}));
    CHECK(xr_loss(t, p) == xr_loss(t.mass(), p.mass()));
    CHECK(kl_divergence(t, p) == kl_divergence(t.mass(), p.mass()));
    const std::vector<Distribution> rows{p, t};
    CHECK(batched_xr_loss(t, rows) == batched_xr_loss(t.mass(), stack_rows(rows)));
  }

  TEST_CASE("property: loss decomposition and bounds on random pairs") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
      const std::size_t n = 2 + rng.index(5);
      const auto t = testing::random_distribution(rng, n, true);
      const auto p = testing::random_distribution(rng, n);
      const std::vector<double> tv(t.data(), t.data() + t.size());
      CHECK(std::abs(entropy(t) - oracle_entropy(tv)) < 1e-12);
      CHECK(std::abs(xr_loss(t, p) - (kl_divergence(t, p) + entropy(t))) < 1e-10);
      CHECK(kl_divergence(t, p) >= -1e-12);
      CHECK(xr_loss(t, p) >= entropy(t) - 1e-12);
    }
  }

  TEST_CASE("property: aggregate posterior is a distribution") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      Eigen::MatrixXd rows(1 + static_cast<Eigen::Index>(rng.index(8)), 4);
      for (Eigen::Index r = 0; r < rows.rows(); ++r) rows.row(r) = testing::random_distribution(rng, 4).transpose();
      const auto post = aggregate_posterior(rows);
      CHECK(std::abs(post.normalized.sum() - 1.0) < 1e-12);
      CHECK(post.normalized.minCoeff() >= 0.0);
    }
  }
}
