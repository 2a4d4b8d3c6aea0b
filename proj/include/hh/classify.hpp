#pragma once
// Petrov-Penrose classification from Weyl-spinor coefficients via the root
// multiplicities of the Penrose quartic, and eigenstructure of the traceless
// Ricci endomorphism.

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "hh/hhgeom.hpp"

namespace hh {

enum class PetrovType { I, II, D, III, N, O };

const char* petrov_name(PetrovType t);

struct RootCluster {
  std::complex<double> value;  // representative (meaningless for infinite root)
  int multiplicity = 0;
  bool at_infinity = false;
};

// Roots of c[4] xi^4 + c[3] xi^3 + c[2] xi^2 + c[1] xi + c[0], projectively:
// vanishing leading coefficients contribute a root at infinity with the
// degree deficit as multiplicity. Clusters merge roots within
// 1e-6 (1 + |root|). Throws AllZero (as ConstraintViolated) if all c vanish.
std::vector<RootCluster> quartic_roots(const std::array<double, 5>& c);

// Penrose quartic from packet coefficients C^(1)..C^(5):
//   q(xi) = sum_k weights[k] * C^(k+1) * xi^k.
// Classification by root multiplicity pattern, cross-checked against the
// I/J specialness invariant and, for aligned spinors (C5=C4=0), the
// 2 C2^2 - 3 C3 C1 degeneracy split; disagreement raises Inconclusive.
PetrovType petrov_from_coeffs(const std::array<double, 5>& C, const ConventionTable& conv);

enum class RicciLabel { Zero, FourEigenvectorsTwoDouble, TwoEigenvectorsQuadruple, Other };

const char* ricci_label_name(RicciLabel l);

struct RicciTypeReport {
  RicciLabel label = RicciLabel::Other;
  std::optional<double> alpha, beta;        // family-specialized invariants
  int eigenvector_count = 0;                // total geometric multiplicity
  std::vector<RootCluster> eigenvalues;     // clustered
  bool consistent = true;                   // label vs (alpha,beta) pattern
};

struct RicciFamilyContext {
  double alpha = 0, beta = 0;  // from family_invariant_scalars
};

RicciTypeReport ricci_type(const CurvaturePacket& packet, const OracleCurvature& oracle,
                           const std::optional<RicciFamilyContext>& family_context = std::nullopt);

// Eigenvalues (clustered) and total geometric multiplicity of a 4x4 matrix.
struct EigenSummary {
  std::vector<RootCluster> eigenvalues;
  int eigenvector_count = 0;
  double scale = 0;  // max |entry| before normalization
};
EigenSummary eigen_summary(const std::array<std::array<double, 4>, 4>& m);

}  // namespace hh
