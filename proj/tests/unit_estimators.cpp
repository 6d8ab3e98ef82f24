#include <cmath>

#include "doctest.h"
#include "nuisblue/estimators.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace nuisblue;

namespace {

double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

double rel_gap(const Vector& a, const Vector& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

}  // namespace

TEST_SUITE_BEGIN("estimators");

TEST_CASE("joint_ls matches the normal-equations oracle on [H G]") {
  Rng rng(301);
  for (int it = 0; it < 20; ++it) {
    const Index n = 5 + static_cast<Index>(rng.next_u64() % 6);
    const Index l = 1 + static_cast<Index>(rng.next_u64() % 3);
    const Index m = 1 + static_cast<Index>(rng.next_u64() % 2);
    const LinearNuisanceModel model = testgen::random_model(rng, n, l, m);

    Matrix hg(n, l + m);
    hg << model.H, model.G;
    const Vector theta = oracles::lstsq(hg, model.y);

    const EstimateReport rep = joint_ls(model);
    CHECK(rep.method == Method::JLS);
    REQUIRE(rep.x_hat.size() == l);
    REQUIRE(rep.u_hat.has_value());
    REQUIRE(rep.u_hat->size() == m);
    CHECK(rel_gap(rep.x_hat, theta.head(l)) < 1e-9);
    CHECK(rel_gap(*rep.u_hat, theta.tail(m)) < 1e-9);

    const double oracle_resid = (model.y - hg * theta).norm();
    CHECK(rep.residual_norm == doctest::Approx(oracle_resid).epsilon(1e-8));
  }
}

TEST_CASE("joint_ls x equals the marginal closed form") {
  // x_hat = (H^T P H)^{-1} H^T P y with P the complement projector of G,
  // assembled entirely from oracle pieces.
  Rng rng(302);
  for (int it = 0; it < 10; ++it) {
    const LinearNuisanceModel model = testgen::random_model(rng, 8, 2, 2);
    const Matrix p =
        Matrix::Identity(8, 8) - model.G * oracles::pinv_tall(model.G);
    const Vector x_marginal = oracles::gauss_solve(
        model.H.transpose() * p * model.H, model.H.transpose() * p * model.y);
    CHECK(rel_gap(joint_ls(model).x_hat, x_marginal) < 1e-9);
  }
}

TEST_CASE("osp_artifacts projector and basis satisfy their identities") {
  Rng rng(303);
  for (int it = 0; it < 10; ++it) {
    const Index n = 5 + static_cast<Index>(rng.next_u64() % 5);
    const Index m = 1 + static_cast<Index>(rng.next_u64() % 3);
    const Matrix g = testgen::bounded_nuisance(rng, n, m);
    const OspArtifacts art = osp_artifacts(g);

    REQUIRE(art.projector.rows() == n);
    REQUIRE(art.projector.cols() == n);
    REQUIRE(art.basis.rows() == n);
    REQUIRE(art.basis.cols() == n - m);

    const Matrix oracle_p =
        Matrix::Identity(n, n) - g * oracles::pinv_tall(g);
    CHECK(max_abs(art.projector - oracle_p) < 1e-10);
    CHECK(max_abs(art.projector - art.projector.transpose()) < 1e-12);
    CHECK(max_abs(art.projector * art.projector - art.projector) < 1e-12);
    CHECK(max_abs(art.projector * g) < 1e-12 * (1.0 + max_abs(g)));
    CHECK(max_abs(art.basis * art.basis.transpose() - art.projector) < 1e-12);
  }
}

TEST_CASE("all four estimation routes agree") {
  Rng rng(304);
  for (int it = 0; it < 25; ++it) {
    const Index n = 5 + static_cast<Index>(rng.next_u64() % 8);
    const Index l = 1 + static_cast<Index>(rng.next_u64() % 4);
    const Index m = 1 + static_cast<Index>(rng.next_u64() % 3);
    if (n < l + m + 1) continue;
    const LinearNuisanceModel model = testgen::random_model(rng, n, l, m);

    const Vector x_joint = joint_ls(model).x_hat;
    const EstimateReport o1 = osp_estimate_type1(model);
    const EstimateReport o2 = osp_estimate_type2(model);
    CHECK(o1.method == Method::OSP1);
    CHECK(o2.method == Method::OSP2);
    CHECK(rel_gap(o1.x_hat, x_joint) < 1e-10);
    CHECK(rel_gap(o2.x_hat, x_joint) < 1e-10);
    CHECK_FALSE(o1.u_hat.has_value());
    CHECK_FALSE(o2.u_hat.has_value());
  }
}

TEST_CASE("estimators reduce to plain least squares when M == 0") {
  Rng rng(305);
  LinearNuisanceModel model;
  model.y = testgen::gaussian_vector(rng, 7);
  model.H = testgen::gaussian_matrix(rng, 7, 3);
  model.G = Matrix(7, 0);
  model.sigma = 0.5;

  const Vector x_ls = oracles::lstsq(model.H, model.y);
  CHECK(rel_gap(joint_ls(model).x_hat, x_ls) < 1e-10);
  CHECK(rel_gap(osp_estimate_type1(model).x_hat, x_ls) < 1e-10);
  CHECK(rel_gap(osp_estimate_type2(model).x_hat, x_ls) < 1e-10);

  const Matrix cov = blue_covariance(model);
  const Matrix cov_oracle =
      model.sigma * model.sigma *
      oracles::gauss_inverse(model.H.transpose() * model.H);
  CHECK(max_abs(cov - cov_oracle) < 1e-10 * (1.0 + max_abs(cov_oracle)));
}

TEST_CASE("blue_covariance matches the oracle and scales with sigma") {
  Rng rng(306);
  LinearNuisanceModel model = testgen::random_model(rng, 8, 2, 2);
  const Matrix p =
      Matrix::Identity(8, 8) - model.G * oracles::pinv_tall(model.G);
  const Matrix cov_oracle =
      model.sigma * model.sigma *
      oracles::gauss_inverse(model.H.transpose() * p * model.H);

  const Matrix cov = blue_covariance(model);
  CHECK(max_abs(cov - cov_oracle) < 1e-9 * (1.0 + max_abs(cov_oracle)));
  CHECK(max_abs(cov - cov.transpose()) < 1e-12 * (1.0 + max_abs(cov)));
  CHECK(cov(0, 0) > 0.0);

  model.sigma *= 3.0;
  const Matrix cov9 = blue_covariance(model);
  CHECK(max_abs(cov9 - 9.0 * cov) < 1e-9 * (1.0 + max_abs(cov9)));
}

TEST_CASE("covariance equals the Monte Carlo spread of the estimator") {
  // Scalar x for a cheap high-count check: var(x_hat) from 20000 noise
  // draws against blue_covariance(0,0).
  Rng geom(307);
  LinearNuisanceModel model = testgen::random_model(geom, 6, 1, 1);
  model.sigma = 0.3;
  const Vector x_true = Vector::Zero(1);
  const Vector u_true = Vector::Zero(1);
  const Vector mean = model.H * x_true + model.G * u_true;

  Rng noise = Rng::derive(307, {1});
  double sum = 0.0, sum_sq = 0.0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    LinearNuisanceModel draw = model;
    for (Index i = 0; i < draw.n(); ++i) {
      draw.y(i) = mean(i) + model.sigma * noise.next_gaussian();
    }
    const double x = joint_ls(draw).x_hat(0);
    sum += x;
    sum_sq += x * x;
  }
  const double mc_var = sum_sq / trials - (sum / trials) * (sum / trials);
  const double predicted = blue_covariance(model)(0, 0);
  // Sampling error of a variance estimate is ~ sqrt(2/trials) = 1%.
  CHECK(mc_var == doctest::Approx(predicted).epsilon(0.05));
}

TEST_CASE("estimation rejects a wanted column living inside col(G)") {
  Rng rng(308);
  LinearNuisanceModel model = testgen::random_model(rng, 6, 1, 1);
  model.H = model.G;  // P H == 0
  CHECK_THROWS_AS(joint_ls(model), Error);
  CHECK_THROWS_AS(osp_estimate_type1(model), Error);
  CHECK_THROWS_AS(osp_estimate_type2(model), Error);
  CHECK_THROWS_AS(blue_covariance(model), Error);
}

TEST_SUITE_END();
