#pragma once

#include <string>
#include <vector>

#include "snerv/clustering.hpp"
#include "snerv/statmetrics.hpp"
#include "snerv/types.hpp"

namespace snerv::svg {

// Annotated correlation heatmap; undefined cells are hatched gray.
// vmin/vmax define the color scale (blue-white-red diverging).
std::string heatmap(const Matrix& values, const BoolMatrix& defined,
                    const std::vector<std::string>& labels,
                    const std::string& title, double vmin, double vmax);

// Side-by-side "<roi> | difference" heatmap pair.
std::string heatmap_pair(const Matrix& a, const BoolMatrix& a_def,
                         const Matrix& b, const BoolMatrix& b_def,
                         const std::vector<std::string>& labels,
                         const std::string& title_a,
                         const std::string& title_b, double vmin, double vmax);

// Mean spectra with +-1 std band, one series per entry.
struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // optional +-band, empty = none
};
std::string line_plot(const std::vector<LineSeries>& series,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label);

// Polar dendrogram over the upper half circle with per-leaf fingerprint
// traces plotted along the rim.
std::string polar_dendrogram(
    const clustering::MixtureTree& tree,
    const std::vector<clustering::SpectralFingerprint>& fingerprints,
    const std::string& title);

}  // namespace snerv::svg
