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
// Spherical perturbation coordinates around a reference pmf. A direction k
// lives on the unit sphere orthogonal to sqrt(p); moving along it traces
// the pmf family r(eps) = p + eps * k .* sqrt(p), whose KL divergence from
// p is (1/2) eps^2 ||k||^2 to second order. Mechanisms are assembled from
// weighted families of such directions.

#ifndef OBFUSKIT_LOCAL_GEOMETRY_HPP_
#define OBFUSKIT_LOCAL_GEOMETRY_HPP_

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "obfuskit/prob.hpp"

namespace obfuskit {

// Tolerance for the structural checks on directions and families: unit
// norm, orthogonality to sqrt(p), and the centering constraint.
inline constexpr double kGeometryTolerance = 1e-10;

// Relative slack applied when comparing a requested eps against the
// feasible bound. Direction coordinates come out of an SVD with a few ulps
// of rounding, which shifts the computed bound by the same amount; without
// slack an eps that is exactly feasible in real arithmetic gets rejected.
// The overshoot this admits drives an entry at most a hair below zero,
// inside the clamp that pmf construction already applies.
inline constexpr double kEpsilonBoundarySlack = 1e-12;

// A unit-norm perturbation direction anchored at a reference pmf.
// Construction enforces, within 1e-10:
//   ||k|| = 1            (directions are pure directions, scale lives in eps)
//   k . sqrt(p) = 0      (first-order mass conservation)
// The reference must be interior since the trajectory divides by sqrt(p).
class PerturbationDirection {
 public:
  PerturbationDirection(Eigen::VectorXd k, Pmf reference);

  const Eigen::VectorXd& k() const { return k_; }
  const Pmf& reference() const { return reference_; }
  int size() const { return static_cast<int>(k_.size()); }

  // Same direction with the sign flipped; the reference is shared.
  PerturbationDirection negated() const;

 private:
  Eigen::VectorXd k_;
  Pmf reference_;
};

// Direction pointing from p toward r in spherical coordinates:
// k = normalize((r - p) ./ sqrt(p)). Raises ZeroDirection when r is
// indistinguishable from p (unnormalized norm below 1e-14) and NotInterior
// when p has zero entries.
PerturbationDirection direction_from_target(const Pmf& p, const Pmf& r);

// The pmf p + eps * k .* sqrt(p). Requires 0 <= eps <=
// max_feasible_epsilon(p, k); beyond that an entry would go negative and
// EpsilonTooLarge is raised. At the boundary itself the touching entry is
// exactly zero, which is a valid (non-interior) pmf.
Pmf perturb(const Pmf& p, const PerturbationDirection& k, double epsilon);

// Largest eps keeping every entry of the perturbed pmf nonnegative:
// min over {x : k(x) < 0} of p(x) / (|k(x)| sqrt(p(x))). Positive
// directions never exhaust mass, so an all-nonnegative k gives +infinity.
double max_feasible_epsilon(const Pmf& p, const PerturbationDirection& k);

// Overload on a raw vector for internal use; a zero vector returns
// +infinity by the same convention.
double max_feasible_epsilon(const Pmf& p, const Eigen::VectorXd& k);

// Second-order KL model along a direction: (1/2) eps^2 ||k||^2.
double local_kl(const PerturbationDirection& k, double epsilon);

// A weighted family of perturbation directions around one reference pmf,
// all displaced by the same eps. This is the shape of a release channel in
// spherical coordinates: weight z carries direction k_z, and the centering
// constraint sum_z w(z) k_z .* sqrt(p) = 0 keeps the mixture of the
// perturbed conditionals equal to the reference exactly.
class PerturbedFamily {
 public:
  PerturbedFamily(Pmf reference, double epsilon,
                  std::vector<std::pair<double, PerturbationDirection>>
                      weighted_directions);

  const Pmf& reference() const { return reference_; }
  double epsilon() const { return epsilon_; }
  const std::vector<std::pair<double, PerturbationDirection>>& entries()
      const {
    return entries_;
  }
  int size() const { return static_cast<int>(entries_.size()); }

  // Realized conditional for entry z.
  Pmf conditional(int z) const;

  // Weights as a pmf over the family index.
  Pmf weights() const;

 private:
  Pmf reference_;
  double epsilon_;
  std::vector<std::pair<double, PerturbationDirection>> entries_;
};

struct C2Check {
  bool ok;
  double max_violation;
};

// Evaluates the centering constraint max_x |sum_z w(z) k_z(x) sqrt(p(x))|
// against the 1e-10 tolerance.
C2Check check_c2(const Pmf& reference,
                 const std::vector<std::pair<double, Eigen::VectorXd>>&
                     weighted_directions);

C2Check check_c2(const PerturbedFamily& family);

}  // namespace obfuskit

#endif  // OBFUSKIT_LOCAL_GEOMETRY_HPP_
