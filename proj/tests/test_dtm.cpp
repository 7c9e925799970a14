// Copyright 2026 The Obfuskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "doctest.h"
#include "obfuskit/dtm.hpp"
#include "obfuskit/errors.hpp"
#include "obfuskit/evaluator.hpp"
#include "obfuskit/local_geometry.hpp"
#include "obfuskit/prob.hpp"

namespace {

using namespace obfuskit;

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

JointXZ frozen_2x2() {
  Eigen::MatrixXd m(2, 2);
  m << 0.3, 0.2, 0.2, 0.3;
  return JointXZ(m);
}

// Joint of (X, Z) realized by a symmetric two-symbol release around p:
// column z carries p + eps * k_z .* sqrt(p) with k_1 = -k_0.
JointXZ spherical_joint(const Pmf& p, const PerturbationDirection& d,
                        double eps) {
  Eigen::MatrixXd m(p.size(), 2);
  m.col(0) = 0.5 * perturb(p, d, eps).values();
  m.col(1) = 0.5 * perturb(p, d.negated(), eps).values();
  return JointXZ(m);
}

}  // namespace

TEST_CASE("transfer matrix of the frozen symmetric joint") {
  const DivergenceTransferMatrix dtm = build_dtm(frozen_2x2());
  CHECK(dtm.b()(0, 0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(dtm.b()(0, 1) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(dtm.b()(1, 0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(dtm.b()(1, 1) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(dtm.dropped_rows().empty());
  CHECK(dtm.dropped_cols().empty());

  const ModalDecomposition modes = svd_modes(dtm);
  REQUIRE(modes.num_modes() == 2);
  CHECK(modes.sigmas()(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(modes.sigmas()(1) == doctest::Approx(0.2).epsilon(1e-12));
  // Nontrivial feature pair is the odd function (1, -1) on both sides.
  CHECK(modes.f_star(1)(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(modes.f_star(1)(1) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(modes.g_star(1)(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(frobenius_mi(dtm) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("every transfer matrix has unit top mode fixing sqrt marginals") {
  std::mt19937_64 rng(7301);
  for (int trial = 0; trial < 60; ++trial) {
    const JointXZ j = random_pair_joint(rng, 2 + trial % 5, 2 + trial % 4);
    const DivergenceTransferMatrix dtm = build_dtm(j);
    const Eigen::VectorXd mapped = dtm.b() * dtm.p_col().sqrt_values();
    CHECK((mapped - dtm.p_row().sqrt_values()).lpNorm<Eigen::Infinity>() <=
          1e-10);
    const ModalDecomposition modes = svd_modes(dtm);
    CHECK(std::abs(modes.sigmas()(0) - 1.0) <= 1e-10);
    // Trivial mode is the positively oriented sqrt of the row marginal.
    CHECK((modes.left(0) - dtm.p_row().sqrt_values()).lpNorm<Eigen::Infinity>() <=
          1e-8);
    // No mode may exceed the trivial one (data processing in disguise).
    for (int i = 1; i < modes.num_modes(); ++i) {
      CHECK(modes.sigmas()(i) <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("modal reconstruction reproduces the joint") {
  std::mt19937_64 rng(7302);
  for (int trial = 0; trial < 40; ++trial) {
    const JointXZ j = random_pair_joint(rng, 2 + trial % 4, 2 + trial % 5);
    const ModalDecomposition modes = svd_modes(build_dtm(j));
    const Eigen::MatrixXd recon = modes.reconstruct_joint();
    CHECK((recon - j.matrix()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("modal reconstruction survives a degenerate leading group") {
  // Deterministic relation row = col mod 2: sigma = 1 twice. The SVD basis
  // of that subspace is arbitrary, and the decomposition must still put
  // the trivial mode first.
  Eigen::MatrixXd m(2, 4);
  m << 0.25, 0.0, 0.25, 0.0, 0.0, 0.25, 0.0, 0.25;
  const JointXZ j(m);
  const ModalDecomposition modes = svd_modes(build_dtm(j));
  CHECK(modes.sigmas()(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(modes.sigmas()(1) == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::VectorXd ones = modes.f_star(0);
  for (int r = 0; r < ones.size(); ++r) {
    CHECK(ones(r) == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK((modes.reconstruct_joint() - m).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("symbols with zero marginal are pruned and recorded") {
  Eigen::MatrixXd m(3, 3);
  m << 0.3, 0.2, 0.0, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0;
  const DivergenceTransferMatrix dtm = build_dtm(JointXZ(m));
  CHECK(dtm.rows() == 2);
  CHECK(dtm.cols() == 2);
  REQUIRE(dtm.dropped_rows().size() == 1);
  REQUIRE(dtm.dropped_cols().size() == 1);
  CHECK(dtm.dropped_rows()[0] == 2);
  CHECK(dtm.dropped_cols()[0] == 2);
  CHECK(frobenius_mi(dtm) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("channel form agrees with the joint form") {
  std::mt19937_64 rng(7303);
  for (int trial = 0; trial < 20; ++trial) {
    const JointXZ j = random_pair_joint(rng, 3, 4);
    // Rebuild the joint as kernel times input marginal.
    Eigen::MatrixXd w = j.matrix();
    for (int c = 0; c < w.cols(); ++c) w.col(c) /= j.p_col()(c);
    const DivergenceTransferMatrix from_joint = build_dtm(j);
    const DivergenceTransferMatrix from_channel =
        build_channel_dtm(Kernel(w), j.p_col(), j.p_row());
    CHECK((from_joint.b() - from_channel.b()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("channel form rejects an inconsistent output marginal") {
  Eigen::MatrixXd w(2, 2);
  w << 0.75, 0.25, 0.25, 0.75;
  const Pmf p_in(vec({0.5, 0.5}));
  CHECK_THROWS_AS(
      build_channel_dtm(Kernel(w), p_in, Pmf(vec({0.9, 0.1}))),
      InconsistentMarginals);
}

TEST_CASE("centered evaluation equals the textbook frobenius form") {
  std::mt19937_64 rng(7304);
  for (int trial = 0; trial < 30; ++trial) {
    const JointXZ j = random_pair_joint(rng, 2 + trial % 4, 2 + trial % 4);
    const DivergenceTransferMatrix dtm = build_dtm(j);
    const double plain = 0.5 * (dtm.b().squaredNorm() - 1.0);
    CHECK(frobenius_mi(dtm) == doctest::Approx(plain).epsilon(1e-9));
  }
}

TEST_CASE("on a spherical release the frobenius form is the exact "
          "chi-squared energy") {
  std::mt19937_64 rng(7305);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 4;
    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw(i) = 0.1 + unif(rng);
    const Pmf p{Eigen::VectorXd(raw / raw.sum())};
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t(i) = 0.1 + unif(rng);
    const PerturbationDirection d =
        direction_from_target(p, Pmf(Eigen::VectorXd(t / t.sum())));
    // Both signed copies must stay feasible at the chosen step.
    const double eps = 0.3 * std::min(max_feasible_epsilon(p, d),
                                      max_feasible_epsilon(p, d.negated()));
    const JointXZ j = spherical_joint(p, d, eps);
    // Unit directions with weights 1/2 each: energy is eps^2 / 2 exactly.
    CHECK(frobenius_mi(build_dtm(j)) ==
          doctest::Approx(0.5 * eps * eps).epsilon(1e-11));
  }
}

TEST_CASE("frobenius form approximates exact mutual information to "
          "second order") {
  const Pmf p(vec({0.2, 0.3, 0.1, 0.4}));
  const PerturbationDirection d =
      direction_from_target(p, Pmf(vec({0.25, 0.25, 0.25, 0.25})));
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const JointXZ j = spherical_joint(p, d, eps);
    const double exact = mutual_information(j);
    const double frob = frobenius_mi(build_dtm(j));
    const double ratio = std::abs(exact - frob) / (eps * eps);
    CHECK(ratio < prev);
    prev = ratio;
  }
}

TEST_CASE("pushforward contracts every direction") {
  std::mt19937_64 rng(7306);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const JointXZ j = random_pair_joint(rng, 2 + trial % 4, 3 + trial % 3);
    const DivergenceTransferMatrix dtm = build_dtm(j);
    Eigen::VectorXd k(dtm.cols());
    for (int i = 0; i < k.size(); ++i) k(i) = gauss(rng);
    k -= k.dot(dtm.p_col().sqrt_values()) * dtm.p_col().sqrt_values();
    if (k.norm() < 1e-9) continue;
    k.normalize();
    CHECK(pushforward_direction(dtm, k).norm() <= 1.0 + 1e-10);
  }
}

TEST_CASE("pushforward rejects a direction anchored elsewhere") {
  const DivergenceTransferMatrix dtm = build_dtm(frozen_2x2());
  const Pmf other(vec({0.9, 0.1}));
  const PerturbationDirection d =
      direction_from_target(other, Pmf(vec({0.8, 0.2})));
  CHECK_THROWS_AS(pushforward_direction(dtm, d), DomainError);
  CHECK_THROWS_AS(pushforward_direction(dtm, Eigen::VectorXd::Zero(5)),
                  DimensionMismatch);
}

TEST_CASE("induced feature is the brute conditional expectation") {
  std::mt19937_64 rng(7307);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const JointXZ j = random_pair_joint(rng, 2 + trial % 4, 2 + trial % 5);
    const DivergenceTransferMatrix dtm = build_dtm(j);
    Eigen::VectorXd f(j.rows());
    for (int r = 0; r < f.size(); ++r) f(r) = gauss(rng);
    const Eigen::VectorXd g = induced_feature(dtm, f);
    for (int c = 0; c < j.cols(); ++c) {
      double brute = 0.0;
      for (int r = 0; r < j.rows(); ++r) {
        brute += j(r, c) / j.p_col()(c) * f(r);
      }
      CHECK(g(c) == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("sigma groups split exactly at gaps") {
  Eigen::MatrixXd m(2, 4);
  m << 0.25, 0.0, 0.25, 0.0, 0.0, 0.25, 0.0, 0.25;
  const ModalDecomposition degenerate = svd_modes(build_dtm(JointXZ(m)));
  const auto groups = degenerate.sigma_groups();
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].first == 0);
  CHECK(groups[0].second == 2);

  const ModalDecomposition split = svd_modes(build_dtm(frozen_2x2()));
  const auto two = split.sigma_groups();
  REQUIRE(two.size() == 2);
  CHECK(two[0] == std::pair<int, int>(0, 1));
  CHECK(two[1] == std::pair<int, int>(1, 2));
  CHECK_FALSE(split.sigma_is_zero(1));
}
