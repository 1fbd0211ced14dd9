#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snerv/types.hpp"

namespace snerv::unmixing {

struct UnmixingConfig {
  int k = 9;
  double lambda1 = 80.0;
  double lambdaF = 20.0;
  int max_iters = 2000;
  double rel_tol = 1e-6;
  std::string init = "nndsvd-like";  // or "random"
  std::uint64_t seed = 0;
  bool row_max_normalize = false;  // off by default; S is used in raw units

  void validate() const;
};

struct UnmixingResult {
  Matrix W;  // [N x k], coefficients
  Matrix H;  // [k x L], component spectra
  std::vector<double> objective_trace;
  double relative_error = 0.0;  // ||S - WH||_F^2 / ||S||_F^2
  bool converged = false;
};

// 1/2 ||S - WH||_F^2 + lambda1 (||W||_1 + ||H||_1)
//   + 1/2 lambdaF (||W||_F^2 + ||H||_F^2)
double nmf_objective(const Matrix& S, const Matrix& W, const Matrix& H,
                     double lambda1, double lambdaF);

// HALS column updates with L1 soft-thresholding and Frobenius shrinkage.
// Deterministic given cfg.seed; components reported in canonical order
// (total coefficient mass descending).
UnmixingResult fit(const Matrix& S, const UnmixingConfig& cfg);

// Project new spectra onto fixed components: minimize the same objective in
// W only. Rows are independent convex subproblems.
Matrix transform(const Matrix& S_new, const Matrix& H,
                 const UnmixingConfig& cfg);

struct ComponentMatch {
  int component = -1;
  std::string chromophore;
  double angle = 0.0;  // radians
};

// Greedy unique assignment of components to library entries in
// increasing-spectral-angle order.
std::vector<ComponentMatch> match_components(const Matrix& H,
                                             const ChromophoreLibrary& library);

}  // namespace snerv::unmixing
