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

#include "obfuskit/local_geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace obfuskit {
namespace {

std::string describe(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Below this unnormalized norm a target is considered equal to the
// reference and no direction can be extracted.
constexpr double kZeroDirectionNorm = 1e-14;

}  // namespace

PerturbationDirection::PerturbationDirection(Eigen::VectorXd k, Pmf reference)
    : k_(std::move(k)), reference_(std::move(reference)) {
  if (k_.size() != reference_.size()) {
    throw DimensionMismatch("direction dimension " +
                            std::to_string(k_.size()) +
                            " does not match reference alphabet " +
                            std::to_string(reference_.size()));
  }
  if (!reference_.interior()) {
    throw NotInterior("perturbation reference must be interior");
  }
  const double norm_gap = std::abs(k_.norm() - 1.0);
  if (norm_gap > kGeometryTolerance) {
    throw ZeroDirection("direction must be unit norm; |norm - 1| = " +
                        describe(norm_gap));
  }
  const double c1 = std::abs(k_.dot(reference_.sqrt_values()));
  if (c1 > kGeometryTolerance) {
    throw DomainError("direction not orthogonal to sqrt(p): <k, sqrt p> = " +
                      describe(c1));
  }
}

PerturbationDirection PerturbationDirection::negated() const {
  return PerturbationDirection(-k_, reference_);
}

PerturbationDirection direction_from_target(const Pmf& p, const Pmf& r) {
  if (p.size() != r.size()) {
    throw DimensionMismatch("target alphabet does not match reference");
  }
  if (!p.interior()) {
    throw NotInterior("direction reference must be interior");
  }
  Eigen::VectorXd k =
      (r.values() - p.values()).cwiseQuotient(p.sqrt_values());
  const double norm = k.norm();
  if (norm < kZeroDirectionNorm) {
    throw ZeroDirection("target coincides with the reference pmf");
  }
  return PerturbationDirection(k / norm, p);
}

Pmf perturb(const Pmf& p, const PerturbationDirection& k, double epsilon) {
  if (epsilon < 0.0) {
    throw DomainError("epsilon must be nonnegative, got " +
                      describe(epsilon));
  }
  const double bound = max_feasible_epsilon(p, k);
  if (epsilon > bound * (1.0 + kEpsilonBoundarySlack)) {
    throw EpsilonTooLarge("epsilon " + describe(epsilon) +
                          " exceeds the feasible bound " + describe(bound));
  }
  return Pmf(p.values() + epsilon * k.k().cwiseProduct(p.sqrt_values()));
}

double max_feasible_epsilon(const Pmf& p, const Eigen::VectorXd& k) {
  if (p.size() != k.size()) {
    throw DimensionMismatch("direction dimension does not match pmf");
  }
  double bound = std::numeric_limits<double>::infinity();
  for (int x = 0; x < p.size(); ++x) {
    if (k(x) < 0.0) {
      bound = std::min(bound, p(x) / (-k(x) * p.sqrt_values()(x)));
    }
  }
  return bound;
}

double max_feasible_epsilon(const Pmf& p, const PerturbationDirection& k) {
  return max_feasible_epsilon(p, k.k());
}

double local_kl(const PerturbationDirection& k, double epsilon) {
  return 0.5 * epsilon * epsilon * k.k().squaredNorm();
}

PerturbedFamily::PerturbedFamily(
    Pmf reference, double epsilon,
    std::vector<std::pair<double, PerturbationDirection>> weighted_directions)
    : reference_(std::move(reference)),
      epsilon_(epsilon),
      entries_(std::move(weighted_directions)) {
  if (entries_.empty()) {
    throw DimensionMismatch("perturbed family needs at least one direction");
  }
  Eigen::VectorXd weights(entries_.size());
  for (size_t z = 0; z < entries_.size(); ++z) {
    weights(static_cast<Eigen::Index>(z)) = entries_[z].first;
    if (entries_[z].second.size() != reference_.size()) {
      throw DimensionMismatch("family direction " + std::to_string(z) +
                              " does not match the reference alphabet");
    }
  }
  // Validates nonnegativity and unit mass of the weights.
  validate_pmf(weights);
  const C2Check c2 = check_c2(*this);
  if (!c2.ok) {
    throw MarginalMismatch("family is not centered: max violation " +
                           describe(c2.max_violation));
  }
  // Every conditional must be realizable at this epsilon; perturb throws
  // EpsilonTooLarge otherwise.
  for (size_t z = 0; z < entries_.size(); ++z) {
    perturb(reference_, entries_[z].second, epsilon_);
  }
}

Pmf PerturbedFamily::conditional(int z) const {
  return perturb(reference_, entries_[static_cast<size_t>(z)].second,
                 epsilon_);
}

Pmf PerturbedFamily::weights() const {
  Eigen::VectorXd w(entries_.size());
  for (size_t z = 0; z < entries_.size(); ++z) {
    w(static_cast<Eigen::Index>(z)) = entries_[z].first;
  }
  return Pmf(w);
}

C2Check check_c2(const Pmf& reference,
                 const std::vector<std::pair<double, Eigen::VectorXd>>&
                     weighted_directions) {
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(reference.size());
  for (const auto& [w, k] : weighted_directions) {
    if (k.size() != reference.size()) {
      throw DimensionMismatch("direction does not match reference alphabet");
    }
    accum += w * k;
  }
  const double violation =
      accum.cwiseProduct(reference.sqrt_values()).lpNorm<Eigen::Infinity>();
  return C2Check{violation <= kGeometryTolerance, violation};
}

C2Check check_c2(const PerturbedFamily& family) {
  std::vector<std::pair<double, Eigen::VectorXd>> raw;
  raw.reserve(family.entries().size());
  for (const auto& [w, dir] : family.entries()) {
    raw.emplace_back(w, dir.k());
  }
  return check_c2(family.reference(), raw);
}

}  // namespace obfuskit
