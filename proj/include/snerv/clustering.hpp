#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snerv/statmetrics.hpp"
#include "snerv/types.hpp"

namespace snerv::clustering {

// One support-pattern class: all member pixels use exactly the same set of
// spectral components. pattern bit j = component j present.
struct MixtureClass {
  std::uint32_t pattern = 0;
  std::vector<int> pixel_ids;  // rows into the masked-spectra matrix
  std::size_t count = 0;
  Spectrum representative;  // mean of L2-normalized member spectra
};

struct ClassEnumeration {
  std::vector<MixtureClass> classes;  // sorted by pattern value; pattern != 0
  std::vector<int> empty_pattern_pixels;
  std::vector<int> class_of_row;  // per row: class index, or -1 (empty pattern)
};

ClassEnumeration enumerate_classes(const BoolMatrix& M, const Matrix& S);

struct Merge {
  int left = 0;   // node ids: 0..n-1 leaves, then n, n+1, ... internal
  int right = 0;
  double height = 0.0;  // in-cluster variance increase of the merge
  std::size_t size = 0; // pixels in the merged cluster
};

struct MixtureTree {
  std::vector<MixtureClass> leaves;
  std::vector<Merge> merges;
  bool weighted = true;
};

// Agglomerative Ward tree over class representatives, classes weighted by
// pixel count (Lance-Williams updates). Ties broken by smallest pattern.
MixtureTree build_tree(const std::vector<MixtureClass>& classes,
                       bool weighted = true);

// Dendrogram leaf ordering: children ordered smaller-min-pattern first.
std::vector<int> leaf_order(const MixtureTree& tree);

struct SpectralFingerprint {
  std::string label;
  std::vector<int> leaves;       // leaf indices in dendrogram order
  std::vector<double> weights;   // relative frequency per leaf, sums to 1
  std::size_t n_pixels = 0;      // pixels contributing to the weights
  std::size_t n_unexplained = 0; // ROI pixels with the empty pattern
};

SpectralFingerprint fingerprint(const MixtureTree& tree,
                                const ClassEnumeration& enumeration,
                                const std::vector<int>& roi_rows,
                                const std::string& label);

double total_variation_distance(const SpectralFingerprint& a,
                                const SpectralFingerprint& b);

// Cluster id per leaf (ids ordered by first appearance in leaf order).
std::vector<int> cut_tree(const MixtureTree& tree, int n_clusters);
std::vector<int> cut_tree_height(const MixtureTree& tree, double height);

struct LeafCorrelations {
  std::vector<int> components;  // present in every selected leaf
  statmetrics::CorrelationMatrices roi;
  statmetrics::CorrelationMatrices reference;
  statmetrics::CorrelationMatrices difference;
};

// Correlations restricted to the selected leaves' member pixels intersected
// with each ROI, over the components present in all selected leaves.
LeafCorrelations leaf_correlations(
    const MixtureTree& tree, const std::vector<int>& leaf_indices,
    const probmodel::StandardizedCoefficients& zc,
    const std::vector<int>& roi_rows, const std::vector<int>& reference_rows,
    const statmetrics::PearsonOptions& opts = {});

struct MeanShape {
  Spectrum mean;
  Spectrum std;  // population
  std::size_t n = 0;
};

// Mean/std over L2-normalized member-pixel spectra (pixel-weighted).
MeanShape cluster_mean_shape(const Matrix& S,
                             const std::vector<int>& member_rows);

}  // namespace snerv::clustering
