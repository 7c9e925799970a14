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

#include "obfuskit/dtm.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <utility>

namespace obfuskit {
namespace {

std::string describe(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Entry magnitudes below this are roundoff when deciding which coordinate
// anchors a sign convention.
constexpr double kSignAnchorFloor = 1e-12;

struct Support {
  std::vector<int> kept;
  std::vector<int> dropped;
};

Support split_support(const Pmf& marginal) {
  Support s;
  for (int i = 0; i < marginal.size(); ++i) {
    (marginal(i) > 0.0 ? s.kept : s.dropped).push_back(i);
  }
  return s;
}

Eigen::VectorXd restrict_vector(const Eigen::VectorXd& v,
                                const std::vector<int>& kept) {
  Eigen::VectorXd out(kept.size());
  for (size_t i = 0; i < kept.size(); ++i) out(i) = v(kept[i]);
  return out;
}

}  // namespace

DivergenceTransferMatrix::DivergenceTransferMatrix(
    Eigen::MatrixXd b, Pmf p_row, Pmf p_col, std::vector<int> dropped_rows,
    std::vector<int> dropped_cols)
    : b_(std::move(b)),
      p_row_(std::move(p_row)),
      p_col_(std::move(p_col)),
      dropped_rows_(std::move(dropped_rows)),
      dropped_cols_(std::move(dropped_cols)) {
  if (b_.rows() != p_row_.size() || b_.cols() != p_col_.size()) {
    throw DimensionMismatch("transfer matrix shape does not match marginals");
  }
}

DivergenceTransferMatrix build_dtm(const JointXZ& joint) {
  const Support rows = split_support(joint.p_row());
  const Support cols = split_support(joint.p_col());
  // A zero marginal means the whole line must be massless; anything else
  // is a corrupt joint (the marginals were not computed from this matrix).
  for (int r : rows.dropped) {
    if (joint.matrix().row(r).lpNorm<Eigen::Infinity>() > kNegativeClamp) {
      throw DegenerateMarginal("row " + std::to_string(r) +
                               " has zero marginal but carries mass");
    }
  }
  for (int c : cols.dropped) {
    if (joint.matrix().col(c).lpNorm<Eigen::Infinity>() > kNegativeClamp) {
      throw DegenerateMarginal("column " + std::to_string(c) +
                               " has zero marginal but carries mass");
    }
  }
  const Pmf p_row(restrict_vector(joint.p_row().values(), rows.kept));
  const Pmf p_col(restrict_vector(joint.p_col().values(), cols.kept));
  Eigen::MatrixXd b(rows.kept.size(), cols.kept.size());
  for (size_t i = 0; i < rows.kept.size(); ++i) {
    for (size_t j = 0; j < cols.kept.size(); ++j) {
      b(i, j) = joint.matrix()(rows.kept[i], cols.kept[j]) /
                (p_row.sqrt_values()(i) * p_col.sqrt_values()(j));
    }
  }
  return DivergenceTransferMatrix(std::move(b), p_row, p_col,
                                  std::move(rows.dropped),
                                  std::move(cols.dropped));
}

DivergenceTransferMatrix build_channel_dtm(const Kernel& w, const Pmf& p_in,
                                           const Pmf& p_out) {
  if (w.in_size() != p_in.size() || w.out_size() != p_out.size()) {
    throw DimensionMismatch("kernel shape does not match the marginals");
  }
  const Eigen::VectorXd implied = w.matrix() * p_in.values();
  const double gap =
      (implied - p_out.values()).lpNorm<Eigen::Infinity>();
  if (gap > kMassTolerance) {
    throw InconsistentMarginals("W p_in deviates from p_out by " +
                                describe(gap));
  }
  // The matrix is normalized by the marginal the kernel actually implies,
  // so B sqrt(p_col) = sqrt(p_row) holds to rounding even when the caller's
  // p_out carries the full 1e-9 slack.
  const Pmf implied_out(implied);
  const Support rows = split_support(implied_out);
  const Support cols = split_support(p_in);
  const Pmf p_row(restrict_vector(implied_out.values(), rows.kept));
  const Pmf p_col(restrict_vector(p_in.values(), cols.kept));
  Eigen::MatrixXd b(rows.kept.size(), cols.kept.size());
  for (size_t i = 0; i < rows.kept.size(); ++i) {
    for (size_t j = 0; j < cols.kept.size(); ++j) {
      b(i, j) = w(rows.kept[i], cols.kept[j]) * p_col.sqrt_values()(j) /
                p_row.sqrt_values()(i);
    }
  }
  return DivergenceTransferMatrix(std::move(b), p_row, p_col,
                                  std::move(rows.dropped),
                                  std::move(cols.dropped));
}

ModalDecomposition::ModalDecomposition(Eigen::VectorXd sigmas,
                                       Eigen::MatrixXd left,
                                       Eigen::MatrixXd right, Pmf p_row,
                                       Pmf p_col)
    : sigmas_(std::move(sigmas)),
      left_(std::move(left)),
      right_(std::move(right)),
      p_row_(std::move(p_row)),
      p_col_(std::move(p_col)) {}

Eigen::VectorXd ModalDecomposition::f_star(int i) const {
  return left_.col(i).cwiseQuotient(p_row_.sqrt_values());
}

Eigen::VectorXd ModalDecomposition::g_star(int i) const {
  return right_.col(i).cwiseQuotient(p_col_.sqrt_values());
}

bool ModalDecomposition::sigma_is_zero(int i) const {
  return sigmas_(i) <= kSigmaZeroTolerance * sigmas_(0);
}

std::vector<std::pair<int, int>> ModalDecomposition::sigma_groups(
    double rel_tol) const {
  std::vector<std::pair<int, int>> groups;
  const double scale = sigmas_.size() > 0 ? sigmas_(0) : 1.0;
  int begin = 0;
  for (int i = 1; i <= num_modes(); ++i) {
    if (i == num_modes() || sigmas_(i - 1) - sigmas_(i) > rel_tol * scale) {
      groups.emplace_back(begin, i);
      begin = i;
    }
  }
  return groups;
}

Eigen::MatrixXd ModalDecomposition::reconstruct_joint() const {
  // P(r, c) = p_row(r) p_col(c) (1 + sum over nontrivial modes of
  // sigma_i f*_i(r) g*_i(c)).
  Eigen::MatrixXd p = p_row_.values() * p_col_.values().transpose();
  for (int i = 1; i < num_modes(); ++i) {
    p += sigmas_(i) *
         (p_row_.values().cwiseProduct(f_star(i))) *
         (p_col_.values().cwiseProduct(g_star(i))).transpose();
  }
  return p;
}

ModalDecomposition svd_modes(const DivergenceTransferMatrix& dtm) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      dtm.b(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sigmas = svd.singularValues();
  Eigen::MatrixXd left = svd.matrixU();
  Eigen::MatrixXd right = svd.matrixV();
  const int k = static_cast<int>(sigmas.size());

  // The pair (sqrt(p_row), sqrt(p_col)) is always a singular pair at
  // sigma = 1. When the leading singular value is degenerate (a
  // deterministic relation between the two symbols, say) the SVD returns
  // an arbitrary orthonormal basis of that subspace, and the trivial mode
  // must be rotated back into position 0 or the modal form
  // P = p q^T (1 + sum_{i>=1} sigma_i f* g*) falls apart. Within a group
  // of equal sigmas a joint rotation of left and right preserves the SVD.
  int group_end = 1;
  while (group_end < k && sigmas(group_end) >= sigmas(0) * (1.0 - 1e-9)) {
    ++group_end;
  }
  if (group_end > 1) {
    const Eigen::VectorXd dc = dtm.p_row().sqrt_values().normalized();
    Eigen::VectorXd coords = left.leftCols(group_end).transpose() * dc;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(coords);
    Eigen::MatrixXd rot = qr.householderQ();
    if (rot.col(0).dot(coords) < 0.0) rot.col(0) = -rot.col(0);
    left.leftCols(group_end) = left.leftCols(group_end) * rot;
    right.leftCols(group_end) = right.leftCols(group_end) * rot;
  }

  for (int i = 0; i < k; ++i) {
    double orient;
    if (i == 0) {
      // The trivial mode is +-sqrt(p_row); orient it positive.
      orient = left.col(0).dot(dtm.p_row().sqrt_values());
    } else {
      // First coordinate above roundoff decides the sign. A unit vector
      // over a desk-scale alphabet always has one.
      orient = 0.0;
      for (int r = 0; r < left.rows(); ++r) {
        if (std::abs(left(r, i)) > kSignAnchorFloor) {
          orient = left(r, i);
          break;
        }
      }
    }
    if (orient < 0.0) {
      left.col(i) = -left.col(i);
      right.col(i) = -right.col(i);
    }
  }
  return ModalDecomposition(std::move(sigmas), std::move(left),
                            std::move(right), dtm.p_row(), dtm.p_col());
}

double frobenius_mi(const DivergenceTransferMatrix& dtm) {
  // Equals (1/2)(||B||_F^2 - 1): the rank-one matrix sqrt(p_row)
  // sqrt(p_col)^T is the unit-sigma mode of B and is orthogonal to the
  // remainder, so subtracting it first avoids computing 1 + tiny - 1.
  const Eigen::MatrixXd centered =
      dtm.b() -
      dtm.p_row().sqrt_values() * dtm.p_col().sqrt_values().transpose();
  return 0.5 * centered.squaredNorm();
}

Eigen::VectorXd pushforward_direction(const DivergenceTransferMatrix& dtm,
                                      const Eigen::VectorXd& k) {
  if (k.size() != dtm.cols()) {
    throw DimensionMismatch("direction dimension " +
                            std::to_string(k.size()) +
                            " does not match transfer matrix columns " +
                            std::to_string(dtm.cols()));
  }
  return dtm.b() * k;
}

Eigen::VectorXd pushforward_direction(const DivergenceTransferMatrix& dtm,
                                      const PerturbationDirection& k) {
  if (k.size() == dtm.cols()) {
    const double gap = (k.reference().values() - dtm.p_col().values())
                           .lpNorm<Eigen::Infinity>();
    if (gap > kMassTolerance) {
      throw DomainError(
          "direction is anchored at a different pmf than the transfer "
          "matrix columns (gap " +
          describe(gap) + ")");
    }
  }
  return pushforward_direction(dtm, k.k());
}

Eigen::VectorXd induced_feature(const DivergenceTransferMatrix& dtm,
                                const Eigen::VectorXd& f) {
  if (f.size() != dtm.rows()) {
    throw DimensionMismatch("feature dimension " + std::to_string(f.size()) +
                            " does not match transfer matrix rows " +
                            std::to_string(dtm.rows()));
  }
  const Eigen::VectorXd xi = f.cwiseProduct(dtm.p_row().sqrt_values());
  return (dtm.b().transpose() * xi).cwiseQuotient(dtm.p_col().sqrt_values());
}

}  // namespace obfuskit
