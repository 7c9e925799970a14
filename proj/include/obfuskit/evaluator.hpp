// Copyright 2026 The Obfuskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Independent evaluation of designed mechanisms: exact mutual informations
// computed straight from the composed joints, side by side with the
// second-order predictions, plus brute-force oracles that share no code
// path with the designer's SVD route.

#ifndef OBFUSKIT_EVALUATOR_HPP_
#define OBFUSKIT_EVALUATOR_HPP_

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "obfuskit/designer.hpp"
#include "obfuskit/prob.hpp"

namespace obfuskit {

struct AuditTriple {
  double xz = 0.0;
  double uz = 0.0;
  double sz = 0.0;
};

struct AuditResult {
  // Exact mutual informations of the composed joints (nats).
  AuditTriple exact;
  // Second-order predictions eps^2/2 * sum_z w(z) ||B k_z||^2, evaluated
  // from the mechanism's directions.
  AuditTriple local;
  // Chi-squared forms (1/2)(||B||_F^2 - 1) of the composed pair joints.
  AuditTriple frobenius;
  // |exact - frobenius| per pair, and the same scaled by 1/eps^2 (defined
  // as 0 when eps = 0). The frobenius form is the reference local model;
  // for mechanisms built from unit directions it coincides with `local` to
  // rounding.
  AuditTriple abs_error;
  AuditTriple error_over_eps2;
  double epsilon = 0.0;
};

// Composes the mechanism with the source joint and evaluates everything
// above. MarginalMismatch if the mechanism's mixture does not reproduce
// the instance's p_X.
AuditResult audit(const JointUSX& joint, const ObfuscationMechanism& mech);

struct SweepRow {
  double epsilon = 0.0;
  AuditTriple exact;
  AuditTriple local;
  double err_xz_over_eps2 = 0.0;
  double err_uz_over_eps2 = 0.0;
  // False when this grid point exceeded the feasible step and was only
  // marked (non-strict mode); its triples are NaN then.
  bool ok = true;
};

// Audits one fixed set of m optimal directions across a grid of epsilons.
// The grid is sorted descending and de-duplicated. In strict mode an
// infeasible grid point raises EpsilonTooLarge; otherwise the row is
// marked not-ok and the sweep continues.
std::vector<SweepRow> epsilon_sweep(const JointUSX& joint, int m,
                                    const std::vector<double>& eps_grid,
                                    double tol = kDefaultTolerance,
                                    bool strict = true);

struct BruteForceVerdict {
  bool feasible = false;
  bool tolerance_sensitive = false;
  // Verdict at each rank tolerance in {1e-6, 1e-9, 1e-12}, same order.
  std::vector<bool> per_tolerance;
};

// Rank-comparison oracle for feasibility, sharing nothing with the
// designer's null-space construction: with A = W_S diag(sqrt(p_X)) and
// C = W_U diag(sqrt(p_X)), a useful perfectly hidden direction exists iff
// rank([A; C]) > rank(A). Ranks come from column-pivoted QR at each
// tolerance in the sweep; the majority wins and disagreement is flagged.
// Guarded to |X| <= 8 (OracleScaleExceeded) since it exists for desk-scale
// cross-checks only.
BruteForceVerdict brute_force_feasibility(const JointUSX& joint);

// Random instances for property tests and acceptance suites: the joint
// tensor is symmetric Dirichlet(1) (normalized iid exponentials), redrawn
// until p_X is interior.
JointUSX random_instance(std::mt19937_64& rng, int nu, int ns, int nx);

// Random pair joint, same sampling scheme.
JointXZ random_pair_joint(std::mt19937_64& rng, int rows, int cols);

}  // namespace obfuskit

#endif  // OBFUSKIT_EVALUATOR_HPP_
