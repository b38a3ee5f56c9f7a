// Common-information measures on discrete two-variable sources: exact
// Gacs-Korner (ergodic decomposition), Wyner's common information by penalised
// alternating minimisation, the grid surrogate for their lossy versions and
// the bound checker that sandwiches interaction information between them.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gwn/pmf.hpp"
#include "gwn/rate_distortion.hpp"

namespace gwn {

enum class CommonInfoMethod { kExactDecomposition, kExhaustive, kAlternating };

std::string to_string(CommonInfoMethod m);

struct CommonInfoResult {
  double value_bits = 0.0;
  // Joint over (X1, X2, aux). Marginalises back to the input joint.
  JointPmf witness;
  std::size_t aux_alphabet_size = 0;
  CommonInfoMethod method = CommonInfoMethod::kExactDecomposition;
  // I(X1;X2|aux) of the witness (0 for exact decompositions).
  double residual_bits = 0.0;
  bool feasible = true;
};

// Connected components of the bipartite support graph of a 2-axis joint.
// Returns the component id of every x1 and x2 symbol (-1 for zero-mass ones).
struct SupportComponents {
  std::vector<int> of_x1;
  std::vector<int> of_x2;
  std::vector<double> mass;  // per component
};
SupportComponents support_components(const JointPmf& joint);

CommonInfoResult gk_common_information_lossless(const JointPmf& joint);

struct WynerOptions {
  std::size_t aux_size = 0;  // 0 => |X1|*|X2|
  int restarts = 32;
  double tol = 1e-6;         // feasibility: I(X1;X2|U) < tol
  std::uint64_t seed = 1;
  double mu_start = 0.5;
  double mu_end = 1e7;
  double mu_growth = 1.3;
  int inner_iters = 40;
};

// Minimises I(X1,X2;U) subject to X1 - U - X2 over P(U|X1,X2).
CommonInfoResult wyner_common_information_lossless(const JointPmf& joint,
                                                   const WynerOptions& opts = {});

// Exhaustive grid over P(U=0|x) for a binary auxiliary: the minimum of
// I(X;U) subject to I(X1;X2|U) <= cmi_slack. Used to certify the alternating
// solver on tiny alphabets.
CommonInfoResult wyner_common_information_grid(const JointPmf& joint, int steps,
                                               double cmi_slack);

// One candidate reproduction tuple, stored as P(z1,z2 | x1,x2) row-major.
struct ReproTuple {
  std::vector<double> conditional;
  double rate = 0.0;         // I(X1,X2; Z1,Z2)
  double distortion1 = 0.0;
  double distortion2 = 0.0;
  double interaction = 0.0;  // I(X1,X2; Z1; Z2)
  // Indices into the marginal encoder lists for product-form tuples.
  int encoder1 = -1;
  int encoder2 = -1;
};

struct EnumerationOptions {
  int grid = 8;               // probability step 1/grid
  double rate_tol = 0.05;     // bits
  double distortion_tol = 1e-12;
  std::size_t max_cells = 1'000'000;   // per marginal encoder grid
  std::size_t max_pairs = 2'000'000;   // product pairs examined for transmit
  BAOptions ba{1e-10, 20'000};
};

// Certified bracket for a rate-distortion value.
struct RateBracket {
  double upper = 0.0;
  double lower = 0.0;
};

struct TupleSets {
  std::vector<ReproTuple> transmit;
  std::vector<ReproTuple> receive;
  RateBracket joint_rate;
  RateBracket rate1;
  RateBracket rate2;
  std::size_t repro1 = 0;
  std::size_t repro2 = 0;
  // Grid encoders P(z|x) referenced by product-form tuples, row-major [x][z].
  std::vector<std::vector<double>> encoders1;
  std::vector<std::vector<double>> encoders2;
  std::size_t enumerated = 0;  // grid conditionals examined
  // Upper bound on max(receive II) - min(transmit II) implied by the rate
  // brackets and the membership tolerance.
  double certification_slack = 0.0;
};

TupleSets lossy_tuple_enumeration(const JointPmf& joint, const DistortionMatrix& d1,
                                  const DistortionMatrix& d2, double D1, double D2,
                                  const EnumerationOptions& opts = {});

struct BoundCheckReport {
  double max_receive_ii = 0.0;
  double min_transmit_ii = 0.0;
  double gk_value = 0.0;
  double wyner_value = 0.0;
  bool ordering_satisfied = false;
  std::size_t enumerated_tuples = 0;
  double certification_slack = 0.0;
  double wyner_residual = 0.0;
  std::vector<double> receive_ii;
  std::vector<double> transmit_ii;
};

struct BoundCheckOptions {
  EnumerationOptions enumeration;
  WynerOptions wyner;
  std::size_t max_wyner_tuples = 8;
};

BoundCheckReport check_theorem1(const JointPmf& joint, const DistortionMatrix& d1,
                                const DistortionMatrix& d2, double D1, double D2,
                                const BoundCheckOptions& opts = {});

// JSON object with the scalar fields and per-set II histograms.
std::string to_json(const BoundCheckReport& report, int histogram_bins = 10);

// Joint table over (X1, X2, Z1, Z2) induced by a conditional tuple.
JointPmf tuple_joint(const JointPmf& joint, std::span<const double> conditional,
                     std::size_t repro1, std::size_t repro2);

// --- Discrete transmit-receive objective over deterministic mappings ---

struct GWDiscreteOptions {
  std::size_t exhaustive_limit = 1'000'000;
  std::uint64_t seed = 7;
  int anneal_iters = 200'000;
};

struct GWDiscreteResult {
  double T_value = 0.0;
  double h_y0 = 0.0;
  double h_y1_given_y0 = 0.0;
  double h_y2_given_y0 = 0.0;
  double distortion1 = 0.0;
  double distortion2 = 0.0;
  std::vector<int> f0;  // over (x1,x2) cells, row-major
  std::vector<int> f1;  // over x1
  std::vector<int> f2;  // over x2
  std::vector<int> g1;  // decoder [y0][y1] -> z1
  std::vector<int> g2;  // decoder [y0][y2] -> z2
  bool exhaustive = true;
  std::size_t evaluated = 0;
};

struct AlphabetSizes {
  std::size_t y0 = 1;
  std::size_t y1 = 1;
  std::size_t y2 = 1;
};

GWDiscreteResult gw_objective_discrete(const JointPmf& joint,
                                       const DistortionMatrix& d1,
                                       const DistortionMatrix& d2, double D1,
                                       double D2, double alpha1, double alpha2,
                                       AlphabetSizes sizes,
                                       const GWDiscreteOptions& opts = {});

}  // namespace gwn
