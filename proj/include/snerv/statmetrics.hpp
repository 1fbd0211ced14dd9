#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "snerv/probmodel.hpp"
#include "snerv/types.hpp"

namespace snerv::statmetrics {

struct CorrelationMatrices {
  Matrix dsc;              // [k x k], 0 where undefined
  Matrix pcc;              // [k x k], 0 where undefined
  BoolMatrix dsc_defined;  // [k x k]
  BoolMatrix pcc_defined;  // [k x k]
  Eigen::MatrixXi support_counts;  // joint-support pixel counts
};

struct PearsonOptions {
  int min_joint_support = 30;
  // When true, PCC is computed over all rows including the -3 sentinels
  // instead of the joint support only (sensitivity-analysis mode).
  bool include_sentinels = false;
};

// Pairwise Sorensen-Dice over the support columns. rows empty = all rows.
Matrix dice_matrix(const BoolMatrix& M, BoolMatrix* defined = nullptr,
                   Eigen::MatrixXi* joint_counts = nullptr,
                   const std::vector<int>& rows = {});

// Pairwise Pearson correlation of the continuous (standardized) values over
// the joint support of each pair. Entries with too little joint support or
// zero variance are flagged undefined, not errors.
Matrix pearson_matrix(const probmodel::StandardizedCoefficients& zc,
                      const PearsonOptions& opts = {},
                      BoolMatrix* defined = nullptr,
                      const std::vector<int>& rows = {});

CorrelationMatrices correlation_matrices(
    const probmodel::StandardizedCoefficients& zc,
    const PearsonOptions& opts = {}, const std::vector<int>& rows = {});

// a - b elementwise; undefined propagates.
CorrelationMatrices difference_matrices(const CorrelationMatrices& a,
                                        const CorrelationMatrices& b);

// Bivariate-normal model of nerve pixel locations, pooled over a dataset.
// lateral = column index, axial = row index, origin at the top-left.
struct ReferenceSampler {
  double mu_lat = 0, mu_ax = 0;
  double sigma_lat = 0, sigma_ax = 0;  // population
  std::size_t n_pixels = 0;
};

ReferenceSampler fit_reference_sampler(const std::vector<RoiMask>& nerve_rois);

struct ReferenceSamples {
  RoiMask mask;                                // accepted pixels, deduplicated
  std::vector<std::pair<int, int>> samples;    // accepted (row, col) draws
};

// Rejection sampling: draws from N((mu_lat, mu_ax), diag(sigma^2)), rounds to
// pixels, rejects outside valid_mask or inside the nerve ROI. Deterministic
// given seed. SamplingExhausted after 100 * n_samples attempts.
ReferenceSamples sample_reference_roi(const ReferenceSampler& sampler,
                                      const MultispectralStack& stack,
                                      const RoiMask& nerve_roi,
                                      std::size_t n_samples,
                                      std::uint64_t seed);

}  // namespace snerv::statmetrics
