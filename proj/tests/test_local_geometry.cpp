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

// A random interior pmf and a unit direction tangent at it, built without
// the library's direction plumbing: project a Gaussian vector against
// sqrt(p) by hand and normalize.
std::pair<Pmf, Eigen::VectorXd> random_point_and_tangent(
    std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd raw(n);
  for (int i = 0; i < n; ++i) raw(i) = 0.05 + unif(rng);
  raw /= raw.sum();
  const Pmf p{raw};
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd k(n);
  while (true) {
    for (int i = 0; i < n; ++i) k(i) = gauss(rng);
    k -= k.dot(p.sqrt_values()) * p.sqrt_values();
    if (k.norm() > 1e-6) break;
  }
  k.normalize();
  return {p, k};
}

}  // namespace

TEST_CASE("direction from target matches the frozen spherical coordinates") {
  const Pmf p(vec({0.5, 0.5}));
  const Pmf r(vec({0.75, 0.25}));
  const PerturbationDirection d = direction_from_target(p, r);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(d.k()(0) == doctest::Approx(inv_sqrt2).epsilon(1e-14));
  CHECK(d.k()(1) == doctest::Approx(-inv_sqrt2).epsilon(1e-14));
  CHECK(max_feasible_epsilon(p, d) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("direction construction enforces the tangent space structure") {
  const Pmf p(vec({0.5, 0.5}));
  // Not unit norm.
  CHECK_THROWS_AS(PerturbationDirection(vec({0.5, -0.5}), p), ZeroDirection);
  // Unit but not orthogonal to sqrt(p).
  CHECK_THROWS_AS(PerturbationDirection(vec({1.0, 0.0}), p), DomainError);
  // Non-interior reference.
  CHECK_THROWS_AS(
      PerturbationDirection(vec({1.0 / std::sqrt(2.0),
                                 -1.0 / std::sqrt(2.0)}),
                            Pmf(vec({1.0, 0.0}))),
      NotInterior);
  // Coincident target has no direction.
  CHECK_THROWS_AS(direction_from_target(p, Pmf(vec({0.5, 0.5}))),
                  ZeroDirection);
}

TEST_CASE("directions built from targets satisfy the mass-conservation "
          "constraint") {
  std::mt19937_64 rng(7201);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 5;
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) a(i) = 0.1 + unif(rng);
    for (int i = 0; i < n; ++i) b(i) = 0.1 + unif(rng);
    const Pmf p{Eigen::VectorXd(a / a.sum())};
    const Pmf r{Eigen::VectorXd(b / b.sum())};
    const PerturbationDirection d = direction_from_target(p, r);
    CHECK(std::abs(d.k().norm() - 1.0) <= 1e-10);
    CHECK(std::abs(d.k().dot(p.sqrt_values())) <= 1e-10);
  }
}

TEST_CASE("perturbing by zero returns the reference") {
  const Pmf p(vec({0.3, 0.7}));
  const PerturbationDirection d = direction_from_target(p, Pmf(vec({0.5, 0.5})));
  const Pmf q = perturb(p, d, 0.0);
  CHECK(q(0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(q(1) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("perturbation with the unnormalized scale is the convex mixture") {
  // Moving from p toward r: p + t (r - p) = (1 - t) p + t r. In spherical
  // coordinates that is eps = t * ||(r - p) ./ sqrt(p)||.
  const Pmf p(vec({0.2, 0.3, 0.5}));
  const Pmf r(vec({0.4, 0.4, 0.2}));
  const Eigen::VectorXd raw =
      (r.values() - p.values()).cwiseQuotient(p.sqrt_values());
  const PerturbationDirection d = direction_from_target(p, r);
  for (double t : {0.25, 0.5, 1.0}) {
    const Pmf q = perturb(p, d, t * raw.norm());
    for (int i = 0; i < 3; ++i) {
      const double expect = (1.0 - t) * p(i) + t * r(i);
      CHECK(q(i) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("perturb walks to the boundary but not past it") {
  const Pmf p(vec({0.5, 0.5}));
  const PerturbationDirection d = direction_from_target(p, Pmf(vec({0.75, 0.25})));
  const double bound = max_feasible_epsilon(p, d);
  const Pmf edge = perturb(p, d, bound);
  CHECK(edge(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_FALSE(edge.interior());
  CHECK_THROWS_AS(perturb(p, d, bound * 1.001), EpsilonTooLarge);
  CHECK_THROWS_AS(perturb(p, d, -0.1), DomainError);
}

TEST_CASE("positive directions have an unbounded feasible step") {
  const Pmf p(vec({0.5, 0.5}));
  CHECK(std::isinf(max_feasible_epsilon(p, Eigen::VectorXd::Zero(2))));
}

TEST_CASE("the quadratic model tracks exact KL to third order") {
  std::mt19937_64 rng(7202);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [p, k] = random_point_and_tangent(rng, 3 + trial % 4);
    const PerturbationDirection d(k, p);
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      if (eps > max_feasible_epsilon(p, d)) continue;
      const double exact = kl_divergence(p, perturb(p, d, eps));
      const double model = local_kl(d, eps);
      CHECK(model == doctest::Approx(0.5 * eps * eps).epsilon(1e-12));
      const double ratio = std::abs(exact - model) / (eps * eps);
      CHECK(ratio < prev_ratio + 1e-12);
      prev_ratio = ratio;
    }
    // At the smallest step the remainder is far below the leading term.
    CHECK(prev_ratio <= 1e-2);
  }
}

TEST_CASE("a centered family validates and reproduces its mixture") {
  const Pmf p(vec({0.25, 0.25, 0.25, 0.25}));
  Eigen::VectorXd k(4);
  k << 0.5, -0.5, 0.5, -0.5;
  const PerturbationDirection d(k, p);
  const PerturbedFamily fam(
      p, 0.5, {{0.5, d}, {0.5, d.negated()}});
  CHECK(fam.size() == 2);
  CHECK(fam.epsilon() == doctest::Approx(0.5));
  const C2Check c2 = check_c2(fam);
  CHECK(c2.ok);
  CHECK(c2.max_violation <= 1e-12);
  // Mixture of the two conditionals lands back on the reference.
  Eigen::VectorXd mix =
      0.5 * fam.conditional(0).values() + 0.5 * fam.conditional(1).values();
  CHECK((mix - p.values()).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("an uncentered family is rejected") {
  const Pmf p(vec({0.25, 0.25, 0.25, 0.25}));
  Eigen::VectorXd k(4);
  k << 0.5, -0.5, 0.5, -0.5;
  const PerturbationDirection d(k, p);
  // Both weights on the same signed direction: the mixture drifts.
  CHECK_THROWS_AS(PerturbedFamily(p, 0.5, {{0.5, d}, {0.5, d}}),
                  MarginalMismatch);
}

TEST_CASE("negation flips the direction and keeps the reference") {
  const Pmf p(vec({0.5, 0.5}));
  const PerturbationDirection d = direction_from_target(p, Pmf(vec({0.75, 0.25})));
  const PerturbationDirection m = d.negated();
  CHECK((d.k() + m.k()).norm() == doctest::Approx(0.0));
  CHECK(&m.reference().values() != &p.values());
  CHECK(m.reference()(0) == doctest::Approx(0.5));
}
