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
// Probability primitives: validated pmfs, column-stochastic kernels, the
// (U, S, X) source joint, generic two-variable joints, and the information
// measures everything else is built on. All divergences are in nats.

#ifndef OBFUSKIT_PROB_HPP_
#define OBFUSKIT_PROB_HPP_

#include <Eigen/Dense>
#include <vector>

#include "obfuskit/errors.hpp"

namespace obfuskit {

// Absolute slack accepted on total mass / column sums before an input is
// rejected. Within this band the vector is renormalized to exact unit mass.
inline constexpr double kMassTolerance = 1e-9;

// Entries in [-kNegativeClamp, 0) are treated as roundoff and clamped to 0;
// anything more negative is rejected as NegativeMass.
inline constexpr double kNegativeClamp = 1e-12;

// A probability mass function over a finite alphabet. Construction
// validates: entries below -1e-12 raise NegativeMass, tiny negatives are
// clamped to zero, and the total mass must be within `mass_tol` of 1
// (MassMismatch otherwise), after which the vector is renormalized so the
// stored mass is exactly 1 up to float rounding.
class Pmf {
 public:
  explicit Pmf(Eigen::VectorXd values, double mass_tol = kMassTolerance);

  int size() const { return static_cast<int>(values_.size()); }
  double operator()(int i) const { return values_(i); }
  const Eigen::VectorXd& values() const { return values_; }

  // Entrywise square root, cached because the spherical coordinates use it
  // on every hot path.
  const Eigen::VectorXd& sqrt_values() const { return sqrt_values_; }

  // True when every entry is strictly positive.
  bool interior() const { return interior_; }

 private:
  Eigen::VectorXd values_;
  Eigen::VectorXd sqrt_values_;
  bool interior_;
};

// Validates a raw vector as a pmf. Thin alias for the Pmf constructor so
// call sites that only need the check read naturally.
Pmf validate_pmf(const Eigen::VectorXd& values,
                 double mass_tol = kMassTolerance);

// A conditional distribution P(out | in), stored as a dense matrix with
// rows indexed by the output alphabet and columns by the input alphabet.
// Every column must be a valid pmf (validated and renormalized on
// construction, same rules as Pmf).
class Kernel {
 public:
  explicit Kernel(Eigen::MatrixXd matrix, double mass_tol = kMassTolerance);

  int out_size() const { return static_cast<int>(matrix_.rows()); }
  int in_size() const { return static_cast<int>(matrix_.cols()); }
  double operator()(int out, int in) const { return matrix_(out, in); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  // Column `in` as a pmf over the output alphabet.
  Pmf column(int in) const;

 private:
  Eigen::MatrixXd matrix_;
};

// Joint distribution of (U, S, X): U is the payload the release should
// serve, S the attribute it must not leak, X the observable both hang off.
// The X-marginal must be interior (every x reachable), since conditionals
// given X and the spherical coordinate system divide by p_X.
class JointUSX {
 public:
  // `tensor` is flattened with x fastest: index (u, s, x) lives at
  // (u * ns + s) * nx + x.
  JointUSX(std::vector<double> tensor, int nu, int ns, int nx,
           double mass_tol = kMassTolerance);

  int nu() const { return nu_; }
  int ns() const { return ns_; }
  int nx() const { return nx_; }
  double p(int u, int s, int x) const {
    return tensor_[static_cast<size_t>((u * ns_ + s) * nx_ + x)];
  }

  const Pmf& p_u() const { return p_u_; }
  const Pmf& p_s() const { return p_s_; }
  const Pmf& p_x() const { return p_x_; }

  // P(S | X) and P(U | X) as column-stochastic kernels (columns indexed
  // by x).
  const Kernel& w_s() const { return w_s_; }
  const Kernel& w_u() const { return w_u_; }

 private:
  std::vector<double> tensor_;
  int nu_, ns_, nx_;
  Pmf p_u_;
  Pmf p_s_;
  Pmf p_x_;
  Kernel w_s_;
  Kernel w_u_;
};

enum class Axis { kU, kS, kX };

// Marginal of the source joint along one axis.
const Pmf& marginalize(const JointUSX& joint, Axis axis);

// Joint distribution of a generic pair of variables, rows indexed by the
// first and columns by the second. compose_markov reuses this shape for the
// (X,Z), (U,Z) and (S,Z) pairs, hence the row/col naming.
class JointXZ {
 public:
  explicit JointXZ(Eigen::MatrixXd matrix, double mass_tol = kMassTolerance);

  int rows() const { return static_cast<int>(matrix_.rows()); }
  int cols() const { return static_cast<int>(matrix_.cols()); }
  double operator()(int r, int c) const { return matrix_(r, c); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Pmf& p_row() const { return p_row_; }
  const Pmf& p_col() const { return p_col_; }

 private:
  Eigen::MatrixXd matrix_;
  Pmf p_row_;
  Pmf p_col_;
};

// Kullback-Leibler divergence sum_x p(x) ln(p(x)/q(x)) in nats, with the
// 0 ln 0 = 0 convention. Raises SupportViolation when p puts mass where q
// has none, DimensionMismatch on different alphabets. Tiny negative totals
// from rounding are clamped to 0.
double kl_divergence(const Pmf& p, const Pmf& q);

// Chi-squared divergence sum_x (p(x) - r(x))^2 / p(x). Note the reference
// measure in the denominator is the FIRST argument, which therefore has to
// be interior (NotInterior otherwise).
double chi2_divergence(const Pmf& p, const Pmf& r);

// Mutual information of a pair joint in nats, evaluated as the
// column-weighted KL form sum_c p_col(c) KL(p(row | c) || p_row).
// Zero-probability columns contribute nothing.
double mutual_information(const JointXZ& joint);

// The three pair joints induced by releasing Z from X under the chain
// (U, S) - X - Z.
struct ComposedJoints {
  JointXZ xz;
  JointXZ uz;
  JointXZ sz;
};

// Composes the source joint with a release channel given as p_Z plus the
// reverse kernel P(X | Z). The mixture sum_z p_Z(z) P(X|Z=z) must equal the
// source p_X within 1e-9 (MarginalMismatch otherwise); U and S attach
// through their conditionals given X, which is exactly the Markov
// structure above.
ComposedJoints compose_markov(const JointUSX& joint, const Pmf& p_z,
                              const Kernel& p_x_given_z);

}  // namespace obfuskit

#endif  // OBFUSKIT_PROB_HPP_
