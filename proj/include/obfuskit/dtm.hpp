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
// Divergence transfer matrices. For a pair joint P the matrix
// B(r, c) = P(r, c) / (sqrt(p_row(r)) sqrt(p_col(c))) carries the local
// geometry of the dependence: its top singular value is always 1 with
// singular pair (sqrt(p_row), sqrt(p_col)), the remaining modes order the
// correlation structure, and (1/2)(||B||_F^2 - 1) is the chi-squared
// mutual information, the second-order model of I(row; col).

#ifndef OBFUSKIT_DTM_HPP_
#define OBFUSKIT_DTM_HPP_

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "obfuskit/local_geometry.hpp"
#include "obfuskit/prob.hpp"

namespace obfuskit {

// Relative cutoff under which a singular value counts as zero:
// sigma <= 1e-9 * sigma_1.
inline constexpr double kSigmaZeroTolerance = 1e-9;

// A divergence transfer matrix together with the marginals it was
// normalized by. Symbols with zero marginal mass are dropped before the
// matrix is formed (their rows/columns are identically zero and would
// produce 0/0); the dropped original indices are kept for reporting.
class DivergenceTransferMatrix {
 public:
  DivergenceTransferMatrix(Eigen::MatrixXd b, Pmf p_row, Pmf p_col,
                           std::vector<int> dropped_rows,
                           std::vector<int> dropped_cols);

  const Eigen::MatrixXd& b() const { return b_; }
  const Pmf& p_row() const { return p_row_; }
  const Pmf& p_col() const { return p_col_; }
  const std::vector<int>& dropped_rows() const { return dropped_rows_; }
  const std::vector<int>& dropped_cols() const { return dropped_cols_; }
  int rows() const { return static_cast<int>(b_.rows()); }
  int cols() const { return static_cast<int>(b_.cols()); }

 private:
  Eigen::MatrixXd b_;
  Pmf p_row_;
  Pmf p_col_;
  std::vector<int> dropped_rows_;
  std::vector<int> dropped_cols_;
};

// DTM of a pair joint. DegenerateMarginal if a zero marginal entry sits on
// a row/column that still carries mass (possible only for corrupt input).
DivergenceTransferMatrix build_dtm(const JointXZ& joint);

// DTM of a channel: for W = P(out | in) with input marginal p_in and
// output marginal p_out = W p_in,
//   B = diag(sqrt(p_out))^-1 W diag(sqrt(p_in)),
// which equals the pair-joint DTM of P(out, in) = W diag(p_in). Rows index
// the output alphabet, columns the input alphabet. InconsistentMarginals
// if W p_in differs from p_out by more than 1e-9.
DivergenceTransferMatrix build_channel_dtm(const Kernel& w, const Pmf& p_in,
                                           const Pmf& p_out);

// Full SVD of a DTM with deterministic sign conventions. Left vectors live
// in row space, right vectors in column space, so
// B = sum_i sigma_i left_i right_i^T with sigmas descending.
class ModalDecomposition {
 public:
  ModalDecomposition(Eigen::VectorXd sigmas, Eigen::MatrixXd left,
                     Eigen::MatrixXd right, Pmf p_row, Pmf p_col);

  int num_modes() const { return static_cast<int>(sigmas_.size()); }
  const Eigen::VectorXd& sigmas() const { return sigmas_; }

  // Singular vectors for mode i (0-based; mode 0 is the trivial
  // (sqrt(p_row), sqrt(p_col)) pair).
  Eigen::VectorXd left(int i) const { return left_.col(i); }
  Eigen::VectorXd right(int i) const { return right_.col(i); }

  // Normalized feature functions f*_i = left_i ./ sqrt(p_row) and
  // g*_i = right_i ./ sqrt(p_col). Mode 0 gives the constant-1 functions.
  Eigen::VectorXd f_star(int i) const;
  Eigen::VectorXd g_star(int i) const;

  const Pmf& p_row() const { return p_row_; }
  const Pmf& p_col() const { return p_col_; }

  // True when sigma_i counts as zero (sigma_i <= 1e-9 * sigma_1).
  bool sigma_is_zero(int i) const;

  // Groups of indices whose singular values coincide within rel_tol of
  // sigma_1; inside such a block individual vectors are basis-dependent
  // and only the spanned subspace is contractual. Each pair is a
  // half-open [begin, end) range.
  std::vector<std::pair<int, int>> sigma_groups(double rel_tol = 1e-9) const;

  // Reassembles the pair joint from the modal form
  //   P(r, c) = p_row(r) p_col(c) (1 + sum_{i>=1} sigma_i f*_i(r) g*_i(c)),
  // where the sum skips the trivial mode. Used by the reconstruction
  // self-checks.
  Eigen::MatrixXd reconstruct_joint() const;

 private:
  Eigen::VectorXd sigmas_;
  Eigen::MatrixXd left_;
  Eigen::MatrixXd right_;
  Pmf p_row_;
  Pmf p_col_;
};

// SVD with the sign convention: the trivial mode is oriented positive
// (left_0 ~ +sqrt(p_row)), and every later mode has its first
// above-roundoff left coordinate positive. Ordering is descending sigma.
ModalDecomposition svd_modes(const DivergenceTransferMatrix& dtm);

// (1/2)(||B||_F^2 - 1), the chi-squared mutual information of the pair.
// Evaluated in the centered form (1/2)||B - sqrt(p_row) sqrt(p_col)^T||_F^2,
// which is the same number (the trivial mode is orthogonal to the rest)
// but does not lose the near-independence regime to cancellation.
double frobenius_mi(const DivergenceTransferMatrix& dtm);

// Action of the DTM on a perturbation direction in column space: B k is
// the induced direction on the row marginal. The direction must match the
// column alphabet (DimensionMismatch otherwise).
Eigen::VectorXd pushforward_direction(const DivergenceTransferMatrix& dtm,
                                      const PerturbationDirection& k);
Eigen::VectorXd pushforward_direction(const DivergenceTransferMatrix& dtm,
                                      const Eigen::VectorXd& k);

// Conditional expectation of a row-alphabet function f under the pair:
// g(c) = E[f(row) | col = c], computed through the DTM as
// g = (B^T (f .* sqrt(p_row))) ./ sqrt(p_col).
Eigen::VectorXd induced_feature(const DivergenceTransferMatrix& dtm,
                                const Eigen::VectorXd& f);

}  // namespace obfuskit

#endif  // OBFUSKIT_DTM_HPP_
