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

#include "obfuskit/prob.hpp"

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

// Shared entry validation for pmfs, kernel columns and joint tensors:
// clamps roundoff negatives, rejects real ones. Operates on contiguous
// storage (VectorXd, MatrixXd and std::vector all qualify, as does a
// single column of a column-major matrix).
void clamp_negatives(double* values, int n, const char* what) {
  for (int i = 0; i < n; ++i) {
    const double v = values[i];
    if (v < -kNegativeClamp) {
      throw NegativeMass(std::string(what) + " entry " + std::to_string(i) +
                         " is negative: " + describe(v));
    }
    if (v < 0.0) values[i] = 0.0;
  }
}

}  // namespace

Pmf::Pmf(Eigen::VectorXd values, double mass_tol)
    : values_(std::move(values)) {
  const int n = static_cast<int>(values_.size());
  if (n == 0) throw DimensionMismatch("pmf over an empty alphabet");
  clamp_negatives(values_.data(), n, "pmf");
  const double mass = values_.sum();
  if (std::abs(mass - 1.0) > mass_tol) {
    throw MassMismatch("pmf mass " + describe(mass) +
                       " deviates from 1 beyond tolerance " +
                       describe(mass_tol));
  }
  values_ /= mass;
  sqrt_values_ = values_.cwiseSqrt();
  interior_ = values_.minCoeff() > 0.0;
}

Pmf validate_pmf(const Eigen::VectorXd& values, double mass_tol) {
  return Pmf(values, mass_tol);
}

Kernel::Kernel(Eigen::MatrixXd matrix, double mass_tol)
    : matrix_(std::move(matrix)) {
  if (matrix_.rows() == 0 || matrix_.cols() == 0) {
    throw DimensionMismatch("kernel with an empty alphabet");
  }
  for (int c = 0; c < matrix_.cols(); ++c) {
    auto col = matrix_.col(c);
    clamp_negatives(col.data(), static_cast<int>(col.size()),
                    "kernel column");
    const double mass = col.sum();
    if (std::abs(mass - 1.0) > mass_tol) {
      throw MassMismatch("kernel column " + std::to_string(c) + " has mass " +
                         describe(mass));
    }
    col /= mass;
  }
}

Pmf Kernel::column(int in) const { return Pmf(matrix_.col(in)); }

namespace {

std::vector<double> validate_tensor(std::vector<double> tensor, size_t expect,
                                    double mass_tol) {
  if (tensor.size() != expect) {
    throw DimensionMismatch("joint tensor has " +
                            std::to_string(tensor.size()) +
                            " entries, alphabet sizes imply " +
                            std::to_string(expect));
  }
  clamp_negatives(tensor.data(), static_cast<int>(tensor.size()),
                  "joint tensor");
  double mass = 0.0;
  for (double v : tensor) mass += v;
  if (std::abs(mass - 1.0) > mass_tol) {
    throw MassMismatch("joint tensor mass " + describe(mass) +
                       " deviates from 1 beyond tolerance " +
                       describe(mass_tol));
  }
  for (double& v : tensor) v /= mass;
  return tensor;
}

Eigen::VectorXd tensor_marginal(const std::vector<double>& t, int nu, int ns,
                                int nx, Axis axis) {
  const int size = axis == Axis::kU ? nu : axis == Axis::kS ? ns : nx;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size);
  for (int u = 0; u < nu; ++u) {
    for (int s = 0; s < ns; ++s) {
      for (int x = 0; x < nx; ++x) {
        const double v = t[static_cast<size_t>((u * ns + s) * nx + x)];
        out(axis == Axis::kU ? u : axis == Axis::kS ? s : x) += v;
      }
    }
  }
  return out;
}

// P(axis | X) for axis in {U, S}. Requires interior p_X.
Eigen::MatrixXd conditional_given_x(const std::vector<double>& t, int nu,
                                    int ns, int nx, const Pmf& p_x,
                                    Axis axis) {
  if (!p_x.interior()) {
    throw NotInterior("p_X has zero entries; conditionals given X undefined");
  }
  const int rows = axis == Axis::kU ? nu : ns;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(rows, nx);
  for (int u = 0; u < nu; ++u) {
    for (int s = 0; s < ns; ++s) {
      for (int x = 0; x < nx; ++x) {
        w(axis == Axis::kU ? u : s, x) +=
            t[static_cast<size_t>((u * ns + s) * nx + x)];
      }
    }
  }
  for (int x = 0; x < nx; ++x) w.col(x) /= p_x(x);
  return w;
}

}  // namespace

JointUSX::JointUSX(std::vector<double> tensor, int nu, int ns, int nx,
                   double mass_tol)
    : tensor_(validate_tensor(std::move(tensor),
                              static_cast<size_t>(nu) * ns * nx, mass_tol)),
      nu_(nu),
      ns_(ns),
      nx_(nx),
      p_u_(tensor_marginal(tensor_, nu, ns, nx, Axis::kU)),
      p_s_(tensor_marginal(tensor_, nu, ns, nx, Axis::kS)),
      p_x_(tensor_marginal(tensor_, nu, ns, nx, Axis::kX)),
      w_s_(conditional_given_x(tensor_, nu, ns, nx, p_x_, Axis::kS)),
      w_u_(conditional_given_x(tensor_, nu, ns, nx, p_x_, Axis::kU)) {}

const Pmf& marginalize(const JointUSX& joint, Axis axis) {
  switch (axis) {
    case Axis::kU:
      return joint.p_u();
    case Axis::kS:
      return joint.p_s();
    default:
      return joint.p_x();
  }
}

JointXZ::JointXZ(Eigen::MatrixXd matrix, double mass_tol)
    : matrix_([&] {
        if (matrix.rows() == 0 || matrix.cols() == 0) {
          throw DimensionMismatch("pair joint with an empty alphabet");
        }
        clamp_negatives(matrix.data(), static_cast<int>(matrix.size()),
                        "pair joint");
        const double mass = matrix.sum();
        if (std::abs(mass - 1.0) > mass_tol) {
          throw MassMismatch("pair joint mass " + describe(mass) +
                             " deviates from 1 beyond tolerance " +
                             describe(mass_tol));
        }
        matrix /= mass;
        return std::move(matrix);
      }()),
      p_row_(matrix_.rowwise().sum()),
      p_col_(matrix_.colwise().sum().transpose()) {}

double kl_divergence(const Pmf& p, const Pmf& q) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("KL over mismatched alphabets: " +
                            std::to_string(p.size()) + " vs " +
                            std::to_string(q.size()));
  }
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double pi = p(i);
    if (pi == 0.0) continue;
    const double qi = q(i);
    if (qi == 0.0) {
      throw SupportViolation("KL undefined: p(" + std::to_string(i) +
                             ") > 0 but q(" + std::to_string(i) + ") = 0");
    }
    total += pi * std::log(pi / qi);
  }
  // Gibbs' inequality makes the true value nonnegative; a float total can
  // land a few ulps below zero when p and q coincide.
  return total < 0.0 ? 0.0 : total;
}

double chi2_divergence(const Pmf& p, const Pmf& r) {
  if (p.size() != r.size()) {
    throw DimensionMismatch("chi2 over mismatched alphabets: " +
                            std::to_string(p.size()) + " vs " +
                            std::to_string(r.size()));
  }
  if (!p.interior()) {
    throw NotInterior("chi2 reference (first argument) must be interior");
  }
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double d = p(i) - r(i);
    total += d * d / p(i);
  }
  return total;
}

double mutual_information(const JointXZ& joint) {
  double total = 0.0;
  for (int c = 0; c < joint.cols(); ++c) {
    const double wc = joint.p_col()(c);
    if (wc == 0.0) continue;
    const Pmf conditional(joint.matrix().col(c) / wc);
    total += wc * kl_divergence(conditional, joint.p_row());
  }
  return total < 0.0 ? 0.0 : total;
}

ComposedJoints compose_markov(const JointUSX& joint, const Pmf& p_z,
                              const Kernel& p_x_given_z) {
  if (p_x_given_z.out_size() != joint.nx()) {
    throw DimensionMismatch("channel output alphabet " +
                            std::to_string(p_x_given_z.out_size()) +
                            " does not match |X| = " +
                            std::to_string(joint.nx()));
  }
  if (p_x_given_z.in_size() != p_z.size()) {
    throw DimensionMismatch("channel input alphabet " +
                            std::to_string(p_x_given_z.in_size()) +
                            " does not match |Z| = " +
                            std::to_string(p_z.size()));
  }
  const Eigen::VectorXd mixture = p_x_given_z.matrix() * p_z.values();
  const double gap =
      (mixture - joint.p_x().values()).lpNorm<Eigen::Infinity>();
  if (gap > kMassTolerance) {
    throw MarginalMismatch("channel mixture deviates from p_X by " +
                           describe(gap));
  }
  const Eigen::MatrixXd pxz =
      p_x_given_z.matrix() * p_z.values().asDiagonal();
  return ComposedJoints{JointXZ(pxz), JointXZ(joint.w_u().matrix() * pxz),
                        JointXZ(joint.w_s().matrix() * pxz)};
}

}  // namespace obfuskit
