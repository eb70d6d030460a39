#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kscontrol/linear_pde.hpp"
#include "kscontrol/rng.hpp"
#include "kscontrol/weights.hpp"

namespace ks {

struct AuditSample {
  double lhs = 0.0;
  double rhs = 0.0;
  double log10_lhs = 0.0;
  double log10_rhs = 0.0;
  double log10_ratio = 0.0;  // computed in log space; finite whenever rhs > 0
  bool skipped = false;
  bool counterexample = false;
};

struct AuditReport {
  int samples = 0;
  std::vector<AuditSample> rows;
  double max_ratio = 0.0;     // may overflow to inf; see log10 statistics
  double median_ratio = 0.0;
  double max_log10_ratio = 0.0;
  double median_log10_ratio = 0.0;
  bool counterexample_evidence = false;
  std::string verdict;
  uint64_t seed = 0;
  double s = 0.0, lambda = 0.0, k = 0.0;
  int m = 0;
  double constancy_deviation = 0.0;  // Neumann demo: sup |(phi, psi) - (1, 0)|
};

// Monte-Carlo probe of the observability inequality: random low-frequency
// terminal data, LHS = |phi(0)|^2 + |psi(0)|^2, RHS the weighted local norm
// of the observed adjoint component over omega x (0, T).
AuditReport observability_ratio(int samples, const WeightSet& weights, const StepOperators& ops,
                                const Interval& omega, const Mesh1D& mesh, uint64_t seed);

// Probe of the global Carleman inequality for the same adjoint solutions.
AuditReport carleman_ratio(int samples, const WeightSet& weights, const StepOperators& ops,
                           const Interval& omega, const Mesh1D& mesh, uint64_t seed);

// Constant adjoint data under homogeneous Neumann conditions: the solution
// stays (1, 0), the observed term vanishes, observability fails.
AuditReport neumann_counterexample(const Mesh1D& mesh, const WeightSet& weights,
                                   const CoefficientSet& coeffs, const Interval& omega);

// Random smooth terminal pair from the first `modes` sine modes.
void random_terminal_pair(Rng& rng, const Mesh1D& mesh, int modes, Field& phi_T, Field& psi_T);

}  // namespace ks
