// Copyright 2026 The Obfuskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command line front end. Five subcommands cover the workflow:
//
//   validate     sanity-check an instance and report its basic statistics
//   feasibility  decide whether perfect obfuscation with utility exists
//   design       build a release mechanism and write it to a file
//   sweep        audit the local model across a grid of step sizes
//   decompose    dump the modal decomposition of a pair joint as CSV
//
// Exit codes are a stable contract: 0 success (or feasible), 1 infeasible,
// 2 domain error, 3 parse error. All numeric report output uses 12
// significant digits and "\n" line endings so repeated runs are
// byte-identical. Mechanism files carry full precision instead; see io.hpp.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "obfuskit/designer.hpp"
#include "obfuskit/dtm.hpp"
#include "obfuskit/errors.hpp"
#include "obfuskit/evaluator.hpp"
#include "obfuskit/io.hpp"
#include "obfuskit/local_geometry.hpp"
#include "obfuskit/prob.hpp"

namespace {

using namespace obfuskit;

std::string fmt12(double v) {
  if (v == 0.0) return "0";  // never print the sign of a zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt12(const Eigen::VectorXd& v) {
  if (v.size() == 0) return "(none)";
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i > 0) out += ' ';
    out += fmt12(v(i));
  }
  return out;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

// Strict double parser for flag values: the whole token must be consumed.
double parse_flag_real(const std::string& token, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(token, &pos);
    if (pos != token.size()) throw std::invalid_argument("trailing garbage");
    if (!std::isfinite(v)) throw std::invalid_argument("not finite");
    return v;
  } catch (const std::exception&) {
    throw ParseError("cannot parse " + what + ": '" + token + "'");
  }
}

// Tolerance resolution order: --tol flag, then OBFUSKIT_TOL, then the
// library default. The environment override lets batch callers retune
// every rank decision without touching scripts.
double resolve_tolerance(std::optional<double> flag_value) {
  if (flag_value.has_value()) {
    if (*flag_value <= 0.0) throw ParseError("--tol must be positive");
    return *flag_value;
  }
  if (const char* env = std::getenv("OBFUSKIT_TOL")) {
    const double v = parse_flag_real(env, "OBFUSKIT_TOL");
    if (v <= 0.0) throw ParseError("OBFUSKIT_TOL must be positive");
    return v;
  }
  return kDefaultTolerance;
}

// Pair joint over (U, X) or (S, X) assembled from the instance tensor.
JointXZ pair_with_x(const JointUSX& joint, Axis axis) {
  const int rows = axis == Axis::kU ? joint.nu() : joint.ns();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, joint.nx());
  for (int u = 0; u < joint.nu(); ++u)
    for (int s = 0; s < joint.ns(); ++s)
      for (int x = 0; x < joint.nx(); ++x)
        m(axis == Axis::kU ? u : s, x) += joint.p(u, s, x);
  return JointXZ(m);
}

int cmd_validate(const std::string& path) {
  const InstanceDocument doc = read_instance_file(path);
  const JointUSX& joint = doc.joint;
  std::printf("sizes: |U|=%d |S|=%d |X|=%d\n", joint.nu(), joint.ns(),
              joint.nx());
  std::printf("mass deviation: %s\n", fmt12(doc.mass_deviation).c_str());
  std::printf("p_U: %s\n", fmt12(joint.p_u().values()).c_str());
  std::printf("p_S: %s\n", fmt12(joint.p_s().values()).c_str());
  std::printf("p_X: %s\n", fmt12(joint.p_x().values()).c_str());
  std::printf("interior: U=%s S=%s X=%s\n", yes_no(joint.p_u().interior()),
              yes_no(joint.p_s().interior()), yes_no(joint.p_x().interior()));
  std::printf("I(U;X) nats: %s\n",
              fmt12(mutual_information(pair_with_x(joint, Axis::kU))).c_str());
  std::printf("I(S;X) nats: %s\n",
              fmt12(mutual_information(pair_with_x(joint, Axis::kS))).c_str());
  std::printf("status: valid\n");
  return 0;
}

int cmd_feasibility(const std::string& path, std::optional<double> tol_flag) {
  const double tol = resolve_tolerance(tol_flag);
  const JointUSX joint = read_instance_file(path).joint;
  const FeasibilityReport rep = feasibility(joint, tol);
  std::printf("tolerance: %s\n", fmt12(rep.tolerance_used).c_str());
  std::printf("null_dim: %d\n", rep.null_dim);
  std::printf("utility_sigmas: %s\n", fmt12(rep.utility_sigmas).c_str());
  std::printf("feasible: %s\n", yes_no(rep.feasible));
  return rep.feasible ? 0 : 1;
}

int cmd_design(const std::string& path, const std::string& epsilon_arg,
               int modes, std::optional<double> rate,
               const std::string& out_path) {
  const double tol = resolve_tolerance(std::nullopt);
  const JointUSX joint = read_instance_file(path).joint;

  std::optional<double> eps_request;
  if (epsilon_arg != "auto") {
    eps_request = parse_flag_real(epsilon_arg, "--epsilon");
  }
  const ObfuscationMechanism mech =
      design_mechanism(joint, eps_request, modes, rate, tol);

  // Reconstruct how the step size was chosen, for the report only. The
  // bound below is the same one design_mechanism used: the mechanism
  // stores every signed direction it retained.
  double bound = std::numeric_limits<double>::infinity();
  for (const PerturbationDirection& d : mech.directions) {
    bound = std::min(bound, max_feasible_epsilon(joint.p_x(), d));
  }
  const double pre_rate = eps_request.has_value() ? *eps_request : 0.9 * bound;
  const char* source = eps_request.has_value() ? "explicit" : "auto";
  if (rate.has_value() && std::sqrt(2.0 * *rate) < pre_rate) {
    source = "rate-capped";
  }

  const AuditResult a = audit(joint, mech);

  std::printf("tolerance: %s\n", fmt12(mech.tolerance_used).c_str());
  std::printf("modes: %d\n", modes);
  std::printf("epsilon: %s (%s)\n", fmt12(mech.epsilon).c_str(), source);
  std::printf("feasible epsilon bound: %s\n", fmt12(bound).c_str());
  std::printf("released symbols: %d\n", mech.p_z.size());
  std::printf("gains: %s\n", fmt12(mech.gains).c_str());
  std::printf("I(X;Z) nats: predicted=%s audited=%s\n",
              fmt12(mech.predicted.i_xz).c_str(), fmt12(a.exact.xz).c_str());
  std::printf("I(U;Z) nats: predicted=%s audited=%s\n",
              fmt12(mech.predicted.i_uz).c_str(), fmt12(a.exact.uz).c_str());
  std::printf("I(S;Z) nats: predicted=%s audited=%s\n",
              fmt12(mech.predicted.i_sz).c_str(), fmt12(a.exact.sz).c_str());
  if (mech.epsilon == 0.0) {
    std::printf(
        "warning: epsilon is 0; the released symbol is constant and the "
        "mechanism carries no information\n");
  }
  write_mechanism_file(out_path, mech);
  std::printf("mechanism written: %s\n", out_path.c_str());
  return 0;
}

// Grid strings are comma separated reals; empty tokens are skipped so ""
// is the empty grid.
std::vector<double> parse_grid(const std::string& arg) {
  std::vector<double> grid;
  std::stringstream ss(arg);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = token.find_last_not_of(" \t");
    grid.push_back(
        parse_flag_real(token.substr(first, last - first + 1), "--eps-grid"));
  }
  return grid;
}

int cmd_sweep(const std::string& path, const std::string& grid_arg, int modes,
              const std::string& out_path) {
  const double tol = resolve_tolerance(std::nullopt);
  const JointUSX joint = read_instance_file(path).joint;
  const std::vector<double> grid = parse_grid(grid_arg);

  std::vector<SweepRow> rows;
  if (!grid.empty()) {
    rows = epsilon_sweep(joint, modes, grid, tol, /*strict=*/false);
  } else {
    // An empty grid still needs the instance to be feasible for the
    // header-only CSV to mean anything; surface infeasibility the same
    // way a populated sweep would.
    optimal_directions(joint, modes, tol);
  }

  std::ofstream csv(out_path);
  if (!csv) throw ParseError("cannot open output file: " + out_path);
  csv << "epsilon,I_XZ_exact,I_XZ_local,I_UZ_exact,I_UZ_local,"
         "I_SZ_exact,I_SZ_local,err_XZ_over_eps2,err_UZ_over_eps2\n";
  int marked = 0;
  for (const SweepRow& r : rows) {
    csv << fmt12(r.epsilon) << ',' << fmt12(r.exact.xz) << ','
        << fmt12(r.local.xz) << ',' << fmt12(r.exact.uz) << ','
        << fmt12(r.local.uz) << ',' << fmt12(r.exact.sz) << ','
        << fmt12(r.local.sz) << ',' << fmt12(r.err_xz_over_eps2) << ','
        << fmt12(r.err_uz_over_eps2) << '\n';
    if (!r.ok) ++marked;
  }
  csv.close();

  std::printf("tolerance: %s\n", fmt12(tol).c_str());
  std::printf("modes: %d\n", modes);
  std::printf("rows: %d\n", static_cast<int>(rows.size()));
  for (const SweepRow& r : rows) {
    if (!r.ok) {
      std::printf("note: epsilon %s exceeds the feasible bound; row marked\n",
                  fmt12(r.epsilon).c_str());
    }
  }
  std::printf("marked rows: %d\n", marked);
  std::printf("csv written: %s\n", out_path.c_str());
  return 0;
}

struct DecomposeInputs {
  std::optional<JointUSX> joint;
  std::optional<ObfuscationMechanism> mech;
};

JointXZ decompose_pair(const DecomposeInputs& in, const std::string& pair) {
  if (pair == "UX" || pair == "SX") {
    if (!in.joint.has_value()) {
      throw PairUnavailable("pair " + pair + " needs an instance document");
    }
    return pair_with_x(*in.joint, pair == "UX" ? Axis::kU : Axis::kS);
  }
  if (pair == "XZ") {
    if (!in.mech.has_value()) {
      throw PairUnavailable("pair XZ needs a mechanism document");
    }
    const ObfuscationMechanism& m = *in.mech;
    Eigen::MatrixXd joint_xz =
        m.p_x_given_z.matrix() * m.p_z.values().asDiagonal();
    return JointXZ(joint_xz);
  }
  if (pair == "UZ" || pair == "SZ") {
    if (!in.joint.has_value() || !in.mech.has_value()) {
      throw PairUnavailable("pair " + pair +
                            " needs both an instance and a mechanism");
    }
    const ComposedJoints composed =
        compose_markov(*in.joint, in.mech->p_z, in.mech->p_x_given_z);
    return pair == "UZ" ? composed.uz : composed.sz;
  }
  throw ParseError("unknown pair: " + pair);
}

std::string join_indices(const std::vector<int>& v) {
  if (v.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

// Original symbol indices that survived marginal pruning, in order.
std::vector<int> kept_indices(int total, const std::vector<int>& dropped) {
  std::vector<int> kept;
  std::size_t d = 0;
  for (int i = 0; i < total; ++i) {
    if (d < dropped.size() && dropped[d] == i) {
      ++d;
    } else {
      kept.push_back(i);
    }
  }
  return kept;
}

int cmd_decompose(const std::string& input_path,
                  const std::string& mech_path, const std::string& pair,
                  const std::string& out_path) {
  DecomposeInputs in;
  const DocumentKind kind = classify_document(input_path);
  if (kind == DocumentKind::kInstance) {
    in.joint = read_instance_file(input_path).joint;
    if (!mech_path.empty()) {
      in.mech = read_mechanism_file(mech_path).mechanism;
    }
  } else {
    if (!mech_path.empty()) {
      throw DomainError(
          "the positional input is already a mechanism; --mechanism only "
          "accompanies an instance document");
    }
    in.mech = read_mechanism_file(input_path).mechanism;
  }

  const JointXZ pj = decompose_pair(in, pair);
  const int orig_rows = pj.rows();
  const int orig_cols = pj.cols();
  const DivergenceTransferMatrix dtm = build_dtm(pj);
  const ModalDecomposition modes = svd_modes(dtm);

  // Residual of the modal reconstruction against the pruned joint, shared
  // by every row of the CSV as a self-check column.
  const std::vector<int> rows_kept = kept_indices(orig_rows, dtm.dropped_rows());
  const std::vector<int> cols_kept = kept_indices(orig_cols, dtm.dropped_cols());
  Eigen::MatrixXd pruned(rows_kept.size(), cols_kept.size());
  for (std::size_t i = 0; i < rows_kept.size(); ++i)
    for (std::size_t j = 0; j < cols_kept.size(); ++j)
      pruned(i, j) = pj(rows_kept[i], cols_kept[j]);
  const double residual =
      (modes.reconstruct_joint() - pruned).cwiseAbs().maxCoeff();

  std::ofstream csv(out_path);
  if (!csv) throw ParseError("cannot open output file: " + out_path);
  csv << "i,sigma,recon_residual";
  for (int r : rows_kept) csv << ",f" << r;
  for (int c : cols_kept) csv << ",g" << c;
  csv << '\n';
  for (int i = 0; i < modes.num_modes(); ++i) {
    csv << (i + 1) << ',' << fmt12(modes.sigmas()(i)) << ','
        << fmt12(residual);
    const Eigen::VectorXd f = modes.f_star(i);
    const Eigen::VectorXd g = modes.g_star(i);
    for (int r = 0; r < f.size(); ++r) csv << ',' << fmt12(f(r));
    for (int c = 0; c < g.size(); ++c) csv << ',' << fmt12(g(c));
    csv << '\n';
  }
  csv.close();

  std::printf("pair: %s\n", pair.c_str());
  std::printf("modes: %d\n", modes.num_modes());
  std::printf("sigma_1: %s\n", fmt12(modes.sigmas()(0)).c_str());
  std::printf("dropped rows: %s\n", join_indices(dtm.dropped_rows()).c_str());
  std::printf("dropped cols: %s\n", join_indices(dtm.dropped_cols()).c_str());
  std::printf("reconstruction residual: %s\n", fmt12(residual).c_str());
  std::printf("csv written: %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"design and audit perfectly obfuscated release channels"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string v_path;
  CLI::App* validate =
      app.add_subcommand("validate", "check an instance file and report "
                                     "sizes, marginals, and baseline "
                                     "information values");
  validate->add_option("instance", v_path, "instance file")->required();

  std::string f_path;
  double f_tol = 0.0;
  CLI::App* feas = app.add_subcommand(
      "feasibility", "decide whether a perfectly obfuscated release with "
                     "positive utility exists");
  feas->add_option("instance", f_path, "instance file")->required();
  feas->add_option("--tol", f_tol,
                   "rank tolerance (overrides OBFUSKIT_TOL and the default)");

  std::string d_path, d_eps = "auto", d_out;
  int d_modes = 1;
  double d_rate = 0.0;
  CLI::App* design = app.add_subcommand(
      "design", "build a release mechanism and write it to a file");
  design->add_option("instance", d_path, "instance file")->required();
  design->add_option("--epsilon", d_eps,
                     "step size, or 'auto' for 0.9 times the feasible bound");
  design->add_option("--modes", d_modes, "retained null directions")
      ->check(CLI::PositiveNumber);
  design->add_option("--rate", d_rate,
                     "cap the second-order release rate eps^2/2");
  design->add_option("--out", d_out, "mechanism output path")->required();

  std::string s_path, s_grid, s_out;
  int s_modes = 1;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "audit exact versus local metrics across a grid of step "
               "sizes and write a CSV");
  sweep->add_option("instance", s_path, "instance file")->required();
  sweep->add_option("--eps-grid", s_grid,
                    "comma separated step sizes (may be empty)")
      ->required();
  sweep->add_option("--modes", s_modes, "retained null directions")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", s_out, "CSV output path")->required();

  std::string c_input, c_mech, c_pair, c_out;
  CLI::App* decomp = app.add_subcommand(
      "decompose", "write the modal decomposition of a pair joint as CSV");
  decomp->add_option("input", c_input, "instance or mechanism file")
      ->required();
  decomp->add_option("--mechanism", c_mech,
                     "mechanism file (with an instance input, enables the "
                     "UZ and SZ pairs)");
  decomp
      ->add_option("--pair", c_pair,
                   "which pair joint to decompose: UX, SX, XZ, UZ, or SZ")
      ->required()
      ->check(CLI::IsMember({"UX", "SX", "XZ", "UZ", "SZ"}));
  decomp->add_option("--out", c_out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (*validate) return cmd_validate(v_path);
    if (*feas) {
      return cmd_feasibility(
          f_path, feas->count("--tol") ? std::optional<double>(f_tol)
                                       : std::nullopt);
    }
    if (*design) {
      return cmd_design(d_path, d_eps, d_modes,
                        design->count("--rate")
                            ? std::optional<double>(d_rate)
                            : std::nullopt,
                        d_out);
    }
    if (*sweep) return cmd_sweep(s_path, s_grid, s_modes, s_out);
    if (*decomp) return cmd_decompose(c_input, c_mech, c_pair, c_out);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const InfeasibleInstance& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 0;
}
