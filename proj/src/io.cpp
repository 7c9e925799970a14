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

#include "obfuskit/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "obfuskit/local_geometry.hpp"

namespace obfuskit {
namespace {

// Full-precision serialization: 17 significant digits round-trip any
// double exactly, so re-reading a mechanism reproduces it bit-for-bit.
std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> tokenize(const std::string& line) {
  const size_t hash = line.find('#');
  std::istringstream is(hash == std::string::npos ? line
                                                  : line.substr(0, hash));
  std::vector<std::string> tokens;
  std::string t;
  while (is >> t) tokens.push_back(t);
  return tokens;
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw ParseError("line " + std::to_string(line_no) + ": " + msg);
}

int parse_index(const std::string& t, int bound, const char* what,
                int line_no) {
  size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(t, &pos);
  } catch (const std::exception&) {
    fail(line_no, std::string("expected an integer ") + what + ", got '" +
                      t + "'");
  }
  if (pos != t.size()) {
    fail(line_no, std::string("trailing characters after ") + what + ": '" +
                      t + "'");
  }
  if (v < 0 || v >= bound) {
    fail(line_no, std::string(what) + " " + t + " outside [0, " +
                      std::to_string(bound) + ")");
  }
  return static_cast<int>(v);
}

int parse_size(const std::string& t, const char* what, int line_no) {
  size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(t, &pos);
  } catch (const std::exception&) {
    fail(line_no, std::string("expected a positive size for ") + what);
  }
  if (pos != t.size() || v < 1 || v > 1000000) {
    fail(line_no, std::string("invalid alphabet size for ") + what + ": '" +
                      t + "'");
  }
  return static_cast<int>(v);
}

double parse_real(const std::string& t, const char* what, int line_no) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    fail(line_no, std::string("expected a number for ") + what + ", got '" +
                      t + "'");
  }
  if (pos != t.size()) {
    fail(line_no, std::string("trailing characters after ") + what + ": '" +
                      t + "'");
  }
  return v;
}

}  // namespace

InstanceDocument read_instance(std::istream& in) {
  bool have_sizes = false;
  int nu = 0, ns = 0, nx = 0;
  std::vector<double> tensor;
  std::vector<bool> seen;
  double raw_mass = 0.0;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (!have_sizes) {
      if (tokens[0] != "sizes" || tokens.size() != 4) {
        fail(line_no, "instance must start with 'sizes |U| |S| |X|'");
      }
      nu = parse_size(tokens[1], "|U|", line_no);
      ns = parse_size(tokens[2], "|S|", line_no);
      nx = parse_size(tokens[3], "|X|", line_no);
      tensor.assign(static_cast<size_t>(nu) * ns * nx, 0.0);
      seen.assign(tensor.size(), false);
      have_sizes = true;
      continue;
    }
    if (tokens.size() != 4) {
      fail(line_no, "expected 'u s x p', got " +
                        std::to_string(tokens.size()) + " fields");
    }
    const int u = parse_index(tokens[0], nu, "u", line_no);
    const int s = parse_index(tokens[1], ns, "s", line_no);
    const int x = parse_index(tokens[2], nx, "x", line_no);
    const double p = parse_real(tokens[3], "p", line_no);
    const size_t idx = static_cast<size_t>((u * ns + s) * nx + x);
    if (seen[idx]) {
      fail(line_no, "duplicate triple (" + tokens[0] + ", " + tokens[1] +
                        ", " + tokens[2] + ")");
    }
    seen[idx] = true;
    tensor[idx] = p;
    raw_mass += p;
  }
  if (!have_sizes) {
    throw ParseError("instance document has no 'sizes' line");
  }
  const double deviation = std::abs(raw_mass - 1.0);
  return InstanceDocument{JointUSX(std::move(tensor), nu, ns, nx),
                          deviation};
}

InstanceDocument read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file: " + path);
  return read_instance(in);
}

void write_instance(std::ostream& out, const JointUSX& joint) {
  out << "# obfuskit instance\n";
  out << "sizes " << joint.nu() << " " << joint.ns() << " " << joint.nx()
      << "\n";
  out << "# u s x p\n";
  for (int u = 0; u < joint.nu(); ++u) {
    for (int s = 0; s < joint.ns(); ++s) {
      for (int x = 0; x < joint.nx(); ++x) {
        const double p = joint.p(u, s, x);
        if (p == 0.0) continue;
        out << u << " " << s << " " << x << " " << full(p) << "\n";
      }
    }
  }
}

void write_mechanism(std::ostream& out, const ObfuscationMechanism& mech) {
  const int nz = mech.p_z.size();
  const int nx = mech.p_x_given_z.out_size();
  out << "# obfuskit mechanism\n";
  out << "mechanism\n";
  out << "sizes " << nz << " " << nx << "\n";
  out << "meta version " << kToolVersion << "\n";
  out << "meta epsilon " << full(mech.epsilon) << "\n";
  out << "meta tolerance " << full(mech.tolerance_used) << "\n";
  if (mech.gains.size() > 0) {
    out << "meta gains";
    for (int i = 0; i < mech.gains.size(); ++i) {
      out << " " << full(mech.gains(i));
    }
    out << "\n";
  }
  out << "meta predicted " << full(mech.predicted.i_xz) << " "
      << full(mech.predicted.i_uz) << " " << full(mech.predicted.i_sz)
      << "\n";
  out << "# release marginal: z p\n";
  for (int z = 0; z < nz; ++z) {
    out << "pz " << z << " " << full(mech.p_z(z)) << "\n";
  }
  out << "# conditionals P(X | Z=z): z x p\n";
  for (int z = 0; z < nz; ++z) {
    for (int x = 0; x < nx; ++x) {
      out << "pxz " << z << " " << x << " " << full(mech.p_x_given_z(x, z))
          << "\n";
    }
  }
  out << "# perturbation direction per z\n";
  for (int z = 0; z < nz; ++z) {
    out << "dir " << z;
    const Eigen::VectorXd& k = mech.directions[static_cast<size_t>(z)].k();
    for (int x = 0; x < nx; ++x) out << " " << full(k(x));
    out << "\n";
  }
}

void write_mechanism_file(const std::string& path,
                          const ObfuscationMechanism& mech) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mechanism file: " + path);
  write_mechanism(out, mech);
}

MechanismDocument read_mechanism(std::istream& in) {
  bool have_marker = false;
  bool have_sizes = false;
  int nz = 0, nx = 0;
  Eigen::VectorXd pz;
  Eigen::MatrixXd pxz;
  Eigen::MatrixXd dirs;
  std::vector<bool> pz_seen, dir_seen;
  std::vector<bool> pxz_seen;
  std::string version;
  bool have_epsilon = false;
  double epsilon = 0.0;
  double tolerance = kDefaultTolerance;
  std::vector<double> gains;
  bool have_predicted = false;
  LocalTriple predicted;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> tokens = tokenize(line);
    if (tokens.empty()) continue;
    const std::string& kind = tokens[0];
    if (!have_marker) {
      if (kind != "mechanism") {
        fail(line_no, "mechanism document must start with 'mechanism'");
      }
      have_marker = true;
      continue;
    }
    if (kind == "sizes") {
      if (have_sizes) fail(line_no, "duplicate sizes line");
      if (tokens.size() != 3) fail(line_no, "expected 'sizes |Z| |X|'");
      nz = parse_size(tokens[1], "|Z|", line_no);
      nx = parse_size(tokens[2], "|X|", line_no);
      // Checked before reading rows so an oversized document reports the
      // design cap instead of a cascade of missing-row complaints.
      if (nz > nx + 2) {
        throw RequestedTooManyDirections(
            "mechanism uses " + std::to_string(nz) +
            " release symbols; the cap is |X| + 2 = " +
            std::to_string(nx + 2));
      }
      pz = Eigen::VectorXd::Zero(nz);
      pxz = Eigen::MatrixXd::Zero(nx, nz);
      dirs = Eigen::MatrixXd::Zero(nx, nz);
      pz_seen.assign(static_cast<size_t>(nz), false);
      dir_seen.assign(static_cast<size_t>(nz), false);
      pxz_seen.assign(static_cast<size_t>(nz) * nx, false);
      have_sizes = true;
      continue;
    }
    if (kind == "meta") {
      if (tokens.size() < 2) fail(line_no, "meta line without a key");
      const std::string& key = tokens[1];
      if (key == "version" && tokens.size() >= 3) {
        version = tokens[2];
      } else if (key == "epsilon" && tokens.size() == 3) {
        epsilon = parse_real(tokens[2], "epsilon", line_no);
        have_epsilon = true;
      } else if (key == "tolerance" && tokens.size() == 3) {
        tolerance = parse_real(tokens[2], "tolerance", line_no);
      } else if (key == "gains") {
        gains.clear();
        for (size_t i = 2; i < tokens.size(); ++i) {
          gains.push_back(parse_real(tokens[i], "gain", line_no));
        }
      } else if (key == "predicted" && tokens.size() == 5) {
        predicted.i_xz = parse_real(tokens[2], "predicted", line_no);
        predicted.i_uz = parse_real(tokens[3], "predicted", line_no);
        predicted.i_sz = parse_real(tokens[4], "predicted", line_no);
        have_predicted = true;
      }
      // Unknown meta keys are tolerated for forward compatibility.
      continue;
    }
    if (!have_sizes) {
      fail(line_no, "'" + kind + "' before the sizes line");
    }
    if (kind == "pz") {
      if (tokens.size() != 3) fail(line_no, "expected 'pz z p'");
      const int z = parse_index(tokens[1], nz, "z", line_no);
      if (pz_seen[static_cast<size_t>(z)]) {
        fail(line_no, "duplicate pz row for z = " + tokens[1]);
      }
      pz_seen[static_cast<size_t>(z)] = true;
      pz(z) = parse_real(tokens[2], "p", line_no);
      continue;
    }
    if (kind == "pxz") {
      if (tokens.size() != 4) fail(line_no, "expected 'pxz z x p'");
      const int z = parse_index(tokens[1], nz, "z", line_no);
      const int x = parse_index(tokens[2], nx, "x", line_no);
      const size_t idx = static_cast<size_t>(z) * nx + x;
      if (pxz_seen[idx]) {
        fail(line_no, "duplicate pxz row for (z, x) = (" + tokens[1] + ", " +
                          tokens[2] + ")");
      }
      pxz_seen[idx] = true;
      pxz(x, z) = parse_real(tokens[3], "p", line_no);
      continue;
    }
    if (kind == "dir") {
      if (static_cast<int>(tokens.size()) != nx + 2) {
        fail(line_no, "expected 'dir z v0 .. v" + std::to_string(nx - 1) +
                          "'");
      }
      const int z = parse_index(tokens[1], nz, "z", line_no);
      if (dir_seen[static_cast<size_t>(z)]) {
        fail(line_no, "duplicate dir row for z = " + tokens[1]);
      }
      dir_seen[static_cast<size_t>(z)] = true;
      for (int x = 0; x < nx; ++x) {
        dirs(x, z) = parse_real(tokens[static_cast<size_t>(x) + 2],
                                "direction entry", line_no);
      }
      continue;
    }
    fail(line_no, "unknown directive '" + kind + "'");
  }

  if (!have_marker) throw ParseError("not a mechanism document");
  if (!have_sizes) throw ParseError("mechanism document has no sizes line");
  if (!have_epsilon) throw ParseError("mechanism document has no epsilon");
  for (int z = 0; z < nz; ++z) {
    if (!pz_seen[static_cast<size_t>(z)]) {
      throw ParseError("missing pz row for z = " + std::to_string(z));
    }
    if (!dir_seen[static_cast<size_t>(z)]) {
      throw ParseError("missing dir row for z = " + std::to_string(z));
    }
  }
  if (epsilon < 0.0) {
    throw DomainError("mechanism epsilon must be nonnegative");
  }
  if (nz > nx + 2) {
    throw RequestedTooManyDirections(
        "mechanism uses " + std::to_string(nz) +
        " release symbols; the cap is |X| + 2 = " + std::to_string(nx + 2));
  }

  Pmf p_z(pz);
  Kernel p_x_given_z(pxz);
  const Pmf p_x(p_x_given_z.matrix() * p_z.values());
  std::vector<PerturbationDirection> directions;
  std::vector<std::pair<double, Eigen::VectorXd>> weighted;
  for (int z = 0; z < nz; ++z) {
    directions.emplace_back(dirs.col(z), p_x);
    weighted.emplace_back(p_z(z), dirs.col(z));
  }
  const C2Check c2 = check_c2(p_x, weighted);
  if (!c2.ok) {
    throw MarginalMismatch("mechanism directions are not centered: " +
                           std::to_string(c2.max_violation));
  }
  Kernel p_z_given_x = bayes_invert(p_z, p_x_given_z, p_x);
  Eigen::VectorXd gain_vec(static_cast<Eigen::Index>(gains.size()));
  for (size_t i = 0; i < gains.size(); ++i) {
    gain_vec(static_cast<Eigen::Index>(i)) = gains[i];
  }
  if (!have_predicted) {
    double weighted_norm2 = 0.0;
    for (int z = 0; z < nz; ++z) {
      weighted_norm2 +=
          p_z(z) * directions[static_cast<size_t>(z)].k().squaredNorm();
    }
    predicted.i_xz = 0.5 * epsilon * epsilon * weighted_norm2;
    predicted.i_uz = gain_vec.size() > 0
                         ? 0.5 * epsilon * epsilon * gain_vec.mean()
                         : 0.0;
    predicted.i_sz = 0.0;
  }
  ObfuscationMechanism mech{std::move(p_z),
                            std::move(p_x_given_z),
                            std::move(p_z_given_x),
                            epsilon,
                            std::move(directions),
                            std::move(gain_vec),
                            predicted,
                            tolerance};
  return MechanismDocument{std::move(mech), version};
}

MechanismDocument read_mechanism_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mechanism file: " + path);
  return read_mechanism(in);
}

DocumentKind classify_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "sizes") return DocumentKind::kInstance;
    if (tokens[0] == "mechanism") return DocumentKind::kMechanism;
    fail(line_no, "file starts with '" + tokens[0] +
                      "'; expected an instance ('sizes') or mechanism "
                      "('mechanism') document");
  }
  throw ParseError("empty document: " + path);
}

}  // namespace obfuskit
