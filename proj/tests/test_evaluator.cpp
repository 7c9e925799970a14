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
#include <vector>

#include "doctest.h"
#include "obfuskit/designer.hpp"
#include "obfuskit/errors.hpp"
#include "obfuskit/evaluator.hpp"
#include "obfuskit/prob.hpp"

namespace {

using namespace obfuskit;

std::vector<double> independent_bits_tensor() {
  std::vector<double> t(2 * 2 * 4, 0.0);
  for (int u = 0; u < 2; ++u)
    for (int s = 0; s < 2; ++s) t[(u * 2 + s) * 4 + (2 * s + u)] = 0.25;
  return t;
}

std::vector<double> u_equals_s_tensor() {
  // U = S, X = S through a symmetric channel: no room to be useful
  // without leaking.
  std::vector<double> t(2 * 2 * 2, 0.0);
  for (int s = 0; s < 2; ++s)
    for (int x = 0; x < 2; ++x)
      t[(s * 2 + s) * 2 + x] = 0.5 * (x == s ? 0.75 : 0.25);
  return t;
}

}  // namespace

TEST_CASE("audit of the boundary design reproduces the closed form") {
  const JointUSX joint(independent_bits_tensor(), 2, 2, 4);
  const ObfuscationMechanism mech = design_mechanism(joint, 1.0);
  const AuditResult a = audit(joint, mech);
  CHECK(a.epsilon == doctest::Approx(1.0));
  // The boundary release reveals the useful bit exactly.
  CHECK(a.exact.uz == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(a.exact.xz == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(a.exact.sz <= 1e-12);
  // Quadratic model: eps^2/2 with unit directions and unit gain.
  CHECK(a.local.xz == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.local.uz == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.local.sz <= 1e-15);
  // For spherical mechanisms the frobenius energy equals the model.
  CHECK(a.frobenius.xz == doctest::Approx(a.local.xz).epsilon(1e-12));
  CHECK(a.frobenius.uz == doctest::Approx(a.local.uz).epsilon(1e-12));
  CHECK(a.abs_error.xz ==
        doctest::Approx(std::abs(a.exact.xz - a.frobenius.xz)).epsilon(1e-12));
  CHECK(a.error_over_eps2.xz == doctest::Approx(a.abs_error.xz).epsilon(1e-12));
}

TEST_CASE("audit of a constant release is identically zero") {
  const JointUSX joint(independent_bits_tensor(), 2, 2, 4);
  const ObfuscationMechanism mech =
      design_mechanism(joint, std::nullopt, 1, 0.0);
  const AuditResult a = audit(joint, mech);
  CHECK(a.exact.xz <= 1e-15);
  CHECK(a.exact.uz <= 1e-15);
  CHECK(a.exact.sz <= 1e-15);
  CHECK(a.local.xz == 0.0);
  // eps = 0 leaves the normalized error undefined; it is reported as 0.
  CHECK(a.error_over_eps2.xz == 0.0);
}

TEST_CASE("audit rejects a mechanism designed for another marginal") {
  const JointUSX joint(independent_bits_tensor(), 2, 2, 4);
  const ObfuscationMechanism mech = design_mechanism(joint, 0.5);
  std::vector<double> t;
  const double px[4] = {0.4, 0.3, 0.2, 0.1};
  for (int u = 0; u < 2; ++u)
    for (int s = 0; s < 2; ++s)
      for (int x = 0; x < 4; ++x) t.push_back(0.25 * px[x]);
  const JointUSX skewed(t, 2, 2, 4);
  CHECK_THROWS_AS(audit(skewed, mech), MarginalMismatch);
}

TEST_CASE("sweep rows arrive sorted, deduplicated, and perfectly "
          "obfuscated") {
  const JointUSX joint(independent_bits_tensor(), 2, 2, 4);
  const std::vector<double> grid = {1e-3, 1e-1, 1e-2, 1e-1, 0.0};
  const std::vector<SweepRow> rows = epsilon_sweep(joint, 1, grid);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].epsilon == doctest::Approx(1e-1));
  CHECK(rows[1].epsilon == doctest::Approx(1e-2));
  CHECK(rows[2].epsilon == doctest::Approx(1e-3));
  CHECK(rows[3].epsilon == 0.0);
  for (const SweepRow& r : rows) {
    CHECK(r.ok);
    CHECK(r.exact.sz <= 1e-10);
  }
  // The zero row is exact zeros, not small noise.
  CHECK(rows[3].exact.xz <= 1e-15);
  CHECK(rows[3].err_xz_over_eps2 == 0.0);
  // Error columns shrink with the step.
  CHECK(rows[1].err_xz_over_eps2 < rows[0].err_xz_over_eps2);
  CHECK(rows[2].err_xz_over_eps2 < rows[1].err_xz_over_eps2);
  CHECK(rows[1].err_uz_over_eps2 < rows[0].err_uz_over_eps2);
  CHECK(rows[2].err_uz_over_eps2 < rows[1].err_uz_over_eps2);
}

TEST_CASE("sweep handles infeasible grid points per the strictness flag") {
  const JointUSX joint(independent_bits_tensor(), 2, 2, 4);
  const std::vector<double> grid = {0.5, 2.0};
  CHECK_THROWS_AS(epsilon_sweep(joint, 1, grid, kDefaultTolerance, true),
                  EpsilonTooLarge);
  const std::vector<SweepRow> rows =
      epsilon_sweep(joint, 1, grid, kDefaultTolerance, false);
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].ok);
  CHECK(std::isnan(rows[0].exact.xz));
  CHECK(std::isnan(rows[0].err_uz_over_eps2));
  CHECK(rows[1].ok);
  CHECK(rows[1].exact.xz > 0.0);
}

TEST_CASE("brute force verdicts match the transfer matrix rank test on "
          "the frozen instances") {
  const BruteForceVerdict bits =
      brute_force_feasibility(JointUSX(independent_bits_tensor(), 2, 2, 4));
  CHECK(bits.feasible);
  CHECK_FALSE(bits.tolerance_sensitive);

  const BruteForceVerdict fused =
      brute_force_feasibility(JointUSX(u_equals_s_tensor(), 2, 2, 2));
  CHECK_FALSE(fused.feasible);
  CHECK_FALSE(fused.tolerance_sensitive);
}

TEST_CASE("brute force agrees with the designer across random instances") {
  std::mt19937_64 rng(7501);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int nu = 2 + static_cast<int>(rng() % 2);
    const int ns = 2 + static_cast<int>(rng() % 2);
    const int nx = 2 + static_cast<int>(rng() % 4);
    const JointUSX joint = random_instance(rng, nu, ns, nx);
    const BruteForceVerdict oracle = brute_force_feasibility(joint);
    if (oracle.tolerance_sensitive) continue;
    CHECK(feasibility(joint).feasible == oracle.feasible);
    ++compared;
  }
  CHECK(compared >= 50);
}

TEST_CASE("brute force refuses oversized alphabets") {
  std::mt19937_64 rng(7502);
  const JointUSX joint = random_instance(rng, 2, 2, 9);
  CHECK_THROWS_AS(brute_force_feasibility(joint), OracleScaleExceeded);
}

TEST_CASE("random generators emit valid distributions") {
  std::mt19937_64 rng(7503);
  for (int trial = 0; trial < 10; ++trial) {
    const JointUSX joint = random_instance(rng, 3, 2, 5);
    double mass = 0.0;
    for (int u = 0; u < 3; ++u)
      for (int s = 0; s < 2; ++s)
        for (int x = 0; x < 5; ++x) mass += joint.p(u, s, x);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(joint.p_x().interior());

    const JointXZ pair = random_pair_joint(rng, 4, 3);
    CHECK(pair.matrix().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pair.matrix().minCoeff() >= 0.0);
  }
}
