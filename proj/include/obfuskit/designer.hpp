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
// Mechanism design. A release channel P(Z | X) leaks nothing about S, to
// every order, exactly when each conditional P(X | Z=z) perturbs p_X along
// a direction in the null space of the (S, X) transfer matrix; utility for
// U is what survives pushing those directions through the (U, X) transfer
// matrix. The designer finds the null space, ranks it by utility gain, and
// assembles an antisymmetric two-point mechanism per retained direction.

#ifndef OBFUSKIT_DESIGNER_HPP_
#define OBFUSKIT_DESIGNER_HPP_

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "obfuskit/dtm.hpp"
#include "obfuskit/local_geometry.hpp"
#include "obfuskit/prob.hpp"

namespace obfuskit {

// Default relative tolerance for rank decisions (which singular values of
// the (S, X) transfer matrix count as zero, and whether any utility
// survives). The CLI lets OBFUSKIT_TOL override it.
inline constexpr double kDefaultTolerance = 1e-9;

struct FeasibilityReport {
  bool feasible = false;
  // Dimension of the null space of the (S, X) transfer matrix.
  int null_dim = 0;
  // Singular values of the (U, X) transfer matrix restricted to that null
  // space, descending. Empty when the null space is trivial.
  Eigen::VectorXd utility_sigmas;
  double tolerance_used = kDefaultTolerance;
};

// Decides whether the instance admits a perfectly obfuscated release with
// positive utility: feasible iff the null space is nontrivial and the top
// restricted singular value exceeds the tolerance.
FeasibilityReport feasibility(const JointUSX& joint,
                              double tol = kDefaultTolerance);

// The top-m unit directions in Null(B_SX) ranked by utility gain
// ||B_UX k||^2, with gains attached (descending). Directions are
// deterministic up to sign, which is fixed by orienting the first
// above-roundoff coordinate positive. Raises InfeasibleInstance when no
// utility survives and RequestedTooManyDirections when m exceeds the null
// space dimension.
struct RankedDirection {
  PerturbationDirection direction;
  double gain;
};

std::vector<RankedDirection> optimal_directions(const JointUSX& joint, int m,
                                                double tol = kDefaultTolerance);

struct LocalTriple {
  double i_xz = 0.0;
  double i_uz = 0.0;
  double i_sz = 0.0;
};

// A designed release channel. The alphabet Z has 2m symbols: direction i
// is used twice, once with each sign, at equal weight, so the mixture of
// the conditionals reproduces p_X exactly and the channel stays centered.
struct ObfuscationMechanism {
  Pmf p_z;
  // P(X | Z): columns indexed by z.
  Kernel p_x_given_z;
  // P(Z | X): columns indexed by x, recovered by Bayes inversion.
  Kernel p_z_given_x;
  double epsilon = 0.0;
  // Direction attached to each z (already signed).
  std::vector<PerturbationDirection> directions;
  // Utility gain per retained mode (m values, descending).
  Eigen::VectorXd gains;
  // Second-order predictions: I(X;Z) = eps^2/2 * sum_z w(z) ||k_z||^2,
  // I(U;Z) = eps^2/2 * mean gain, I(S;Z) = 0.
  LocalTriple predicted;
  double tolerance_used = kDefaultTolerance;
};

// Designs a mechanism with m retained directions. epsilon = nullopt picks
// 0.9 times the largest step every signed direction tolerates; an explicit
// epsilon beyond that bound raises EpsilonTooLarge. rate_R, if given, caps
// the second-order release rate: eps is shrunk so that eps^2/2 <= rate_R.
// The released alphabet is capped at |X| + 2 symbols
// (RequestedTooManyDirections when 2m would exceed it or m the null
// dimension).
ObfuscationMechanism design_mechanism(
    const JointUSX& joint, std::optional<double> epsilon = std::nullopt,
    int m = 1, std::optional<double> rate_r = std::nullopt,
    double tol = kDefaultTolerance);

// Assembles a mechanism from externally supplied unit directions at a
// given epsilon. Shared by design_mechanism, the sweep (which reuses one
// set of directions across many epsilons), and the mechanism-file reader.
ObfuscationMechanism design_with_directions(
    const JointUSX& joint, const std::vector<RankedDirection>& ranked,
    double epsilon, double tol = kDefaultTolerance);

// Reverse channel by Bayes' rule:
// P(Z | X=x)(z) = P(X | Z=z)(x) p_Z(z) / p_X(x). The mixture
// sum_z p_Z(z) P(X | Z=z) must reproduce p_X within 1e-9
// (MarginalMismatch), and p_X must be interior.
Kernel bayes_invert(const Pmf& p_z, const Kernel& p_x_given_z,
                    const Pmf& p_x);

}  // namespace obfuskit

#endif  // OBFUSKIT_DESIGNER_HPP_
