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

#include "obfuskit/evaluator.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>

#include "obfuskit/dtm.hpp"

namespace obfuskit {
namespace {

// Rank tolerances for the brute-force oracle, coarse to fine.
const double kRankTolerances[] = {1e-6, 1e-9, 1e-12};

int rank_at(const Eigen::MatrixXd& m, double tol) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(tol);
  return static_cast<int>(qr.rank());
}

}  // namespace

AuditResult audit(const JointUSX& joint, const ObfuscationMechanism& mech) {
  const ComposedJoints composed =
      compose_markov(joint, mech.p_z, mech.p_x_given_z);

  AuditResult r;
  r.epsilon = mech.epsilon;
  r.exact.xz = mutual_information(composed.xz);
  r.exact.uz = mutual_information(composed.uz);
  r.exact.sz = mutual_information(composed.sz);

  // Second-order predictions from the mechanism's own directions, pushed
  // through the instance's transfer matrices.
  const DivergenceTransferMatrix b_ux =
      build_channel_dtm(joint.w_u(), joint.p_x(), joint.p_u());
  const DivergenceTransferMatrix b_sx =
      build_channel_dtm(joint.w_s(), joint.p_x(), joint.p_s());
  const double half_eps2 = 0.5 * mech.epsilon * mech.epsilon;
  double nx = 0.0, nu = 0.0, ns = 0.0;
  for (int z = 0; z < mech.p_z.size(); ++z) {
    const double w = mech.p_z(z);
    const Eigen::VectorXd& k = mech.directions[static_cast<size_t>(z)].k();
    nx += w * k.squaredNorm();
    nu += w * pushforward_direction(b_ux, k).squaredNorm();
    ns += w * pushforward_direction(b_sx, k).squaredNorm();
  }
  r.local.xz = half_eps2 * nx;
  r.local.uz = half_eps2 * nu;
  r.local.sz = half_eps2 * ns;

  r.frobenius.xz = frobenius_mi(build_dtm(composed.xz));
  r.frobenius.uz = frobenius_mi(build_dtm(composed.uz));
  r.frobenius.sz = frobenius_mi(build_dtm(composed.sz));

  r.abs_error.xz = std::abs(r.exact.xz - r.frobenius.xz);
  r.abs_error.uz = std::abs(r.exact.uz - r.frobenius.uz);
  r.abs_error.sz = std::abs(r.exact.sz - r.frobenius.sz);
  const double eps2 = mech.epsilon * mech.epsilon;
  if (eps2 > 0.0) {
    r.error_over_eps2.xz = r.abs_error.xz / eps2;
    r.error_over_eps2.uz = r.abs_error.uz / eps2;
    r.error_over_eps2.sz = r.abs_error.sz / eps2;
  }
  return r;
}

std::vector<SweepRow> epsilon_sweep(const JointUSX& joint, int m,
                                    const std::vector<double>& eps_grid,
                                    double tol, bool strict) {
  std::vector<double> grid = eps_grid;
  std::sort(grid.begin(), grid.end(), std::greater<double>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<SweepRow> rows;
  if (grid.empty()) return rows;

  const std::vector<RankedDirection> ranked =
      optimal_directions(joint, m, tol);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double eps : grid) {
    SweepRow row;
    row.epsilon = eps;
    try {
      const ObfuscationMechanism mech =
          design_with_directions(joint, ranked, eps, tol);
      const AuditResult a = audit(joint, mech);
      row.exact = a.exact;
      row.local.xz = mech.predicted.i_xz;
      row.local.uz = mech.predicted.i_uz;
      row.local.sz = mech.predicted.i_sz;
      row.err_xz_over_eps2 = a.error_over_eps2.xz;
      row.err_uz_over_eps2 = a.error_over_eps2.uz;
      // A designed mechanism hides S to every order; anything visible
      // above roundoff is an internal defect, not a property of the grid.
      if (a.exact.sz > 1e-10) {
        throw std::logic_error("designed mechanism leaked I(S;Z) = " +
                               std::to_string(a.exact.sz));
      }
    } catch (const EpsilonTooLarge&) {
      if (strict) throw;
      row.ok = false;
      row.exact = AuditTriple{nan, nan, nan};
      row.local = AuditTriple{nan, nan, nan};
      row.err_xz_over_eps2 = nan;
      row.err_uz_over_eps2 = nan;
    }
    rows.push_back(row);
  }
  return rows;
}

BruteForceVerdict brute_force_feasibility(const JointUSX& joint) {
  if (joint.nx() > 8) {
    throw OracleScaleExceeded("brute-force oracle is limited to |X| <= 8, "
                              "got " + std::to_string(joint.nx()));
  }
  // A release direction k is invisible to S iff W_S diag(sqrt p_X) k = 0
  // and useful for U iff W_U diag(sqrt p_X) k != 0; such a k exists iff
  // stacking the U rows under the S rows raises the rank.
  const Eigen::MatrixXd a =
      joint.w_s().matrix() * joint.p_x().sqrt_values().asDiagonal();
  const Eigen::MatrixXd c =
      joint.w_u().matrix() * joint.p_x().sqrt_values().asDiagonal();
  Eigen::MatrixXd stacked(a.rows() + c.rows(), a.cols());
  stacked << a, c;

  BruteForceVerdict v;
  int votes = 0;
  for (double tol : kRankTolerances) {
    const bool feasible = rank_at(stacked, tol) > rank_at(a, tol);
    v.per_tolerance.push_back(feasible);
    votes += feasible ? 1 : 0;
  }
  v.feasible = votes * 2 > static_cast<int>(v.per_tolerance.size());
  v.tolerance_sensitive =
      votes != 0 && votes != static_cast<int>(v.per_tolerance.size());
  return v;
}

namespace {

// Symmetric Dirichlet(1) sample: normalized iid exponentials.
std::vector<double> dirichlet_flat(std::mt19937_64& rng, int cells) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> t(static_cast<size_t>(cells));
  double total = 0.0;
  for (double& v : t) {
    v = -std::log(1.0 - unif(rng));
    total += v;
  }
  for (double& v : t) v /= total;
  return t;
}

}  // namespace

JointUSX random_instance(std::mt19937_64& rng, int nu, int ns, int nx) {
  for (;;) {
    std::vector<double> t = dirichlet_flat(rng, nu * ns * nx);
    // p_X must be interior; with Dirichlet mass spread over nu*ns cells
    // per x a zero marginal is a measure-zero event, but stay safe.
    std::vector<double> px(static_cast<size_t>(nx), 0.0);
    for (int u = 0; u < nu; ++u) {
      for (int s = 0; s < ns; ++s) {
        for (int x = 0; x < nx; ++x) {
          px[static_cast<size_t>(x)] +=
              t[static_cast<size_t>((u * ns + s) * nx + x)];
        }
      }
    }
    if (*std::min_element(px.begin(), px.end()) > 0.0) {
      return JointUSX(std::move(t), nu, ns, nx);
    }
  }
}

JointXZ random_pair_joint(std::mt19937_64& rng, int rows, int cols) {
  std::vector<double> t = dirichlet_flat(rng, rows * cols);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = t[static_cast<size_t>(r * cols + c)];
    }
  }
  return JointXZ(std::move(m));
}

}  // namespace obfuskit
