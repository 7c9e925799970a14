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
// Text formats. Both documents are line oriented, hand-editable, and
// diff-friendly; '#' starts a comment anywhere on a line.
//
// Instance file:
//   sizes |U| |S| |X|
//   u s x p        (0-based indices; omitted triples carry zero mass)
//
// Mechanism file:
//   mechanism
//   sizes |Z| |X|
//   meta <key> <values...>
//   pz z p         (release marginal)
//   pxz z x p      (P(X | Z=z))
//   dir z v0 v1 .. (perturbation direction attached to z)

#ifndef OBFUSKIT_IO_HPP_
#define OBFUSKIT_IO_HPP_

#include <iosfwd>
#include <string>

#include "obfuskit/designer.hpp"
#include "obfuskit/prob.hpp"

namespace obfuskit {

inline constexpr const char* kToolVersion = "0.1.0";

struct InstanceDocument {
  JointUSX joint;
  // Absolute deviation of the raw mass from 1 before renormalization,
  // reported by cmd_validate so silent rescaling stays visible.
  double mass_deviation = 0.0;
};

// Parses an instance document. ParseError for malformed or duplicate rows,
// out-of-range indices, or a missing sizes line; domain errors (mass,
// negativity, non-interior p_X) propagate from JointUSX construction.
InstanceDocument read_instance(std::istream& in);
InstanceDocument read_instance_file(const std::string& path);

// Writes the joint tensor back out (used by tooling and tests; entries are
// serialized exactly).
void write_instance(std::ostream& out, const JointUSX& joint);

struct MechanismDocument {
  ObfuscationMechanism mechanism;
  std::string version;
};

// Serializes a mechanism with full double precision so a read-back
// reproduces every stored value bit-for-bit (the report surfaces, not this
// file, round for display).
void write_mechanism(std::ostream& out, const ObfuscationMechanism& mech);
void write_mechanism_file(const std::string& path,
                          const ObfuscationMechanism& mech);

// Parses a mechanism document and revalidates it: weights and columns must
// be pmfs, directions unit and orthogonal to sqrt of the implied p_X, the
// family centered, and the released alphabet within the |X| + 2 cap. The
// reverse kernel is rebuilt by Bayes inversion against the mixture.
MechanismDocument read_mechanism(std::istream& in);
MechanismDocument read_mechanism_file(const std::string& path);

enum class DocumentKind { kInstance, kMechanism };

// Peeks at the first directive of a file to classify it. ParseError when
// the file starts with neither `sizes` nor `mechanism`.
DocumentKind classify_document(const std::string& path);

}  // namespace obfuskit

#endif  // OBFUSKIT_IO_HPP_
