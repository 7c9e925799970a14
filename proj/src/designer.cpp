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

#include "obfuskit/designer.hpp"

#include <Eigen/SVD>
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

constexpr double kSignAnchorFloor = 1e-12;

// Fraction of the hard feasibility bound used when epsilon is picked
// automatically, keeping the designed conditionals strictly interior.
constexpr double kAutoEpsilonFraction = 0.9;

struct NullAnalysis {
  FeasibilityReport report;
  // Orthonormal basis of Null(B_SX), |X| x null_dim.
  Eigen::MatrixXd null_basis;
  // Transfer matrix of P(U | X) against p_X.
  Eigen::MatrixXd b_ux;
  // Right singular vectors of B_UX * null_basis (null_dim columns).
  Eigen::MatrixXd restricted_right;
};

NullAnalysis analyze(const JointUSX& joint, double tol) {
  if (tol <= 0.0) {
    throw DomainError("tolerance must be positive, got " + describe(tol));
  }
  NullAnalysis out;
  out.report.tolerance_used = tol;

  const DivergenceTransferMatrix b_sx =
      build_channel_dtm(joint.w_s(), joint.p_x(), joint.p_s());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_s(b_sx.b(), Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd_s.singularValues();
  const double scale = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol * scale) ++rank;
  }
  const int nx = joint.nx();
  out.report.null_dim = nx - rank;
  out.null_basis = svd_s.matrixV().rightCols(out.report.null_dim);

  const DivergenceTransferMatrix b_ux =
      build_channel_dtm(joint.w_u(), joint.p_x(), joint.p_u());
  out.b_ux = b_ux.b();

  if (out.report.null_dim == 0) {
    out.report.feasible = false;
    out.report.utility_sigmas = Eigen::VectorXd(0);
    return out;
  }
  const Eigen::MatrixXd m = out.b_ux * out.null_basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_m(m, Eigen::ComputeFullV);
  out.report.utility_sigmas = svd_m.singularValues();
  out.restricted_right = svd_m.matrixV();
  out.report.feasible = out.report.utility_sigmas.size() > 0 &&
                        out.report.utility_sigmas(0) > tol;
  return out;
}

}  // namespace

FeasibilityReport feasibility(const JointUSX& joint, double tol) {
  return analyze(joint, tol).report;
}

std::vector<RankedDirection> optimal_directions(const JointUSX& joint, int m,
                                                double tol) {
  if (m < 1) {
    throw DomainError("at least one direction must be requested");
  }
  const NullAnalysis analysis = analyze(joint, tol);
  if (!analysis.report.feasible) {
    throw InfeasibleInstance(
        "no hidden direction with positive utility exists (null_dim = " +
        std::to_string(analysis.report.null_dim) + ")");
  }
  if (m > analysis.report.null_dim) {
    throw RequestedTooManyDirections(
        "requested " + std::to_string(m) + " directions but the null space "
        "has dimension " + std::to_string(analysis.report.null_dim));
  }
  std::vector<RankedDirection> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd k =
        analysis.null_basis * analysis.restricted_right.col(i);
    k /= k.norm();
    // Deterministic orientation: first above-roundoff coordinate positive.
    for (int x = 0; x < k.size(); ++x) {
      if (std::abs(k(x)) > kSignAnchorFloor) {
        if (k(x) < 0.0) k = -k;
        break;
      }
    }
    const double gain = i < analysis.report.utility_sigmas.size()
                            ? analysis.report.utility_sigmas(i) *
                                  analysis.report.utility_sigmas(i)
                            : 0.0;
    out.push_back(
        RankedDirection{PerturbationDirection(k, joint.p_x()), gain});
  }
  return out;
}

ObfuscationMechanism design_with_directions(
    const JointUSX& joint, const std::vector<RankedDirection>& ranked,
    double epsilon, double tol) {
  const int m = static_cast<int>(ranked.size());
  if (m < 1) throw DomainError("mechanism needs at least one direction");
  const int nz = 2 * m;
  if (nz > joint.nx() + 2) {
    throw RequestedTooManyDirections(
        "released alphabet would need " + std::to_string(nz) +
        " symbols; the cap is |X| + 2 = " + std::to_string(joint.nx() + 2));
  }
  if (epsilon < 0.0) {
    throw DomainError("epsilon must be nonnegative, got " +
                      describe(epsilon));
  }

  // Each retained direction appears with both signs at equal weight, so
  // the mixture of the perturbed conditionals telescopes back to p_X.
  std::vector<PerturbationDirection> signed_dirs;
  signed_dirs.reserve(nz);
  for (const RankedDirection& rd : ranked) {
    signed_dirs.push_back(rd.direction);
    signed_dirs.push_back(rd.direction.negated());
  }

  Eigen::MatrixXd conditionals(joint.nx(), nz);
  for (int z = 0; z < nz; ++z) {
    conditionals.col(z) =
        perturb(joint.p_x(), signed_dirs[z], epsilon).values();
  }
  Pmf p_z(Eigen::VectorXd::Constant(nz, 1.0 / nz));
  Kernel p_x_given_z(std::move(conditionals));
  Kernel p_z_given_x = bayes_invert(p_z, p_x_given_z, joint.p_x());

  // Structural self-checks; violations mean a bug upstream, not bad input.
  {
    std::vector<std::pair<double, Eigen::VectorXd>> weighted;
    weighted.reserve(nz);
    for (int z = 0; z < nz; ++z) {
      weighted.emplace_back(p_z(z), signed_dirs[z].k());
    }
    const C2Check c2 = check_c2(joint.p_x(), weighted);
    if (!c2.ok) {
      throw DomainError("designed family lost centering: violation " +
                        describe(c2.max_violation));
    }
    const DivergenceTransferMatrix b_sx =
        build_channel_dtm(joint.w_s(), joint.p_x(), joint.p_s());
    for (int z = 0; z < nz; ++z) {
      const double leak = pushforward_direction(b_sx, signed_dirs[z].k())
                              .lpNorm<Eigen::Infinity>();
      if (leak > tol) {
        throw DomainError("direction " + std::to_string(z) +
                          " leaks into S: |B_SX k| = " + describe(leak));
      }
    }
  }

  Eigen::VectorXd gains(m);
  for (int i = 0; i < m; ++i) gains(i) = ranked[i].gain;
  double weighted_norm2 = 0.0;
  for (int z = 0; z < nz; ++z) {
    weighted_norm2 += p_z(z) * signed_dirs[static_cast<size_t>(z)]
                                   .k()
                                   .squaredNorm();
  }
  LocalTriple predicted;
  predicted.i_xz = 0.5 * epsilon * epsilon * weighted_norm2;
  predicted.i_uz = 0.5 * epsilon * epsilon * gains.mean();
  predicted.i_sz = 0.0;
  return ObfuscationMechanism{std::move(p_z),
                              std::move(p_x_given_z),
                              std::move(p_z_given_x),
                              epsilon,
                              std::move(signed_dirs),
                              std::move(gains),
                              predicted,
                              tol};
}

ObfuscationMechanism design_mechanism(const JointUSX& joint,
                                      std::optional<double> epsilon, int m,
                                      std::optional<double> rate_r,
                                      double tol) {
  const std::vector<RankedDirection> ranked =
      optimal_directions(joint, m, tol);

  double bound = std::numeric_limits<double>::infinity();
  for (const RankedDirection& rd : ranked) {
    bound = std::min(bound, max_feasible_epsilon(joint.p_x(), rd.direction));
    bound = std::min(
        bound, max_feasible_epsilon(joint.p_x(), rd.direction.negated()));
  }

  double eps;
  if (epsilon.has_value()) {
    eps = *epsilon;
    if (eps > bound * (1.0 + kEpsilonBoundarySlack)) {
      throw EpsilonTooLarge("epsilon " + describe(eps) +
                            " exceeds the feasible bound " + describe(bound));
    }
  } else {
    eps = kAutoEpsilonFraction * bound;
  }
  if (rate_r.has_value()) {
    if (*rate_r < 0.0) {
      throw DomainError("rate bound must be nonnegative");
    }
    // Second-order release rate is eps^2/2 (unit directions); shrink eps
    // until it fits under the requested budget.
    eps = std::min(eps, std::sqrt(2.0 * *rate_r));
  }
  return design_with_directions(joint, ranked, eps, tol);
}

Kernel bayes_invert(const Pmf& p_z, const Kernel& p_x_given_z,
                    const Pmf& p_x) {
  if (p_x_given_z.in_size() != p_z.size() ||
      p_x_given_z.out_size() != p_x.size()) {
    throw DimensionMismatch("kernel shape does not match the marginals");
  }
  if (!p_x.interior()) {
    throw NotInterior("Bayes inversion needs interior p_X");
  }
  const Eigen::VectorXd mixture = p_x_given_z.matrix() * p_z.values();
  const double gap = (mixture - p_x.values()).lpNorm<Eigen::Infinity>();
  if (gap > kMassTolerance) {
    throw MarginalMismatch("mixture of conditionals deviates from p_X by " +
                           describe(gap));
  }
  Eigen::MatrixXd reverse(p_z.size(), p_x.size());
  for (int x = 0; x < p_x.size(); ++x) {
    for (int z = 0; z < p_z.size(); ++z) {
      reverse(z, x) = p_x_given_z(x, z) * p_z(z) / p_x(x);
    }
  }
  return Kernel(std::move(reverse));
}

}  // namespace obfuskit
