#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "snerv/errors.hpp"

namespace snerv {

using Spectrum = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Ordered wavelength axis in nanometers. All spectra and stacks refer to one.
class WavelengthGrid {
public:
  WavelengthGrid() = default;
  explicit WavelengthGrid(std::vector<double> wavelengths_nm);

  // 700, 710, ..., 970 nm (28 entries).
  static WavelengthGrid default_grid();

  std::size_t size() const { return wl_.size(); }
  double operator[](std::size_t i) const { return wl_[i]; }
  const std::vector<double>& values() const { return wl_; }
  bool operator==(const WavelengthGrid&) const = default;

private:
  std::vector<double> wl_;
};

// Per-pixel spectra for one image, row-major [row][col][wavelength].
struct MultispectralStack {
  int height = 0;
  int width = 0;
  double pixel_spacing_mm = 0.1;
  WavelengthGrid grid;
  std::vector<float> data;
  std::vector<std::uint8_t> valid_mask;  // [row][col], 0/1

  int n_wavelengths() const { return static_cast<int>(grid.size()); }
  std::size_t n_pixels() const {
    return static_cast<std::size_t>(height) * width;
  }
  std::size_t pixel_index(int r, int c) const {
    return static_cast<std::size_t>(r) * width + c;
  }
  float at(int r, int c, int w) const {
    return data[pixel_index(r, c) * n_wavelengths() + w];
  }
  float& at(int r, int c, int w) {
    return data[pixel_index(r, c) * n_wavelengths() + w];
  }
  bool valid(int r, int c) const { return valid_mask[pixel_index(r, c)] != 0; }
  Spectrum spectrum_at(int r, int c) const;

  // Checks shape consistency, pixel_spacing > 0, finite data on valid pixels.
  void validate() const;
};

struct RoiMask {
  std::string label;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> mask;  // [row][col], 0/1

  bool at(int r, int c) const {
    return mask[static_cast<std::size_t>(r) * width + c] != 0;
  }
  std::size_t count() const;
};

// Named absorption spectra on a shared wavelength axis. Supplied as data
// files; the library never hard-codes chromophore values.
class ChromophoreLibrary {
public:
  std::vector<double> wavelengths_nm;

  // Rejects duplicate names, negative values, and identically-zero spectra.
  void add(const std::string& name, const Spectrum& s);
  bool contains(const std::string& name) const;
  const Spectrum& spectrum(const std::string& name) const;  // UnknownChromophore
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Spectrum>& spectra() const { return spectra_; }
  std::size_t size() const { return names_.size(); }

private:
  std::vector<std::string> names_;
  std::vector<Spectrum> spectra_;
};

enum class SpectrumNorm { None, L2, Max };

Spectrum l2_normalize(const Spectrum& s);

// arccos of cosine similarity, in [0, pi/2] for non-negative inputs.
double spectral_angle(const Spectrum& a, const Spectrum& b);

struct MeanStd {
  Spectrum mean;
  Spectrum std;  // population
  std::size_t n_used = 0;
  std::size_t n_skipped = 0;  // zero-spectrum pixels excluded from normalized stats
};

MeanStd mean_spectrum(const MultispectralStack& stack, const RoiMask& roi,
                      SpectrumNorm norm = SpectrumNorm::L2);

// Row-major list of valid pixel indices; defines the row order of every
// masked matrix (spectra, W, Z, M) derived from a stack.
std::vector<int> valid_pixel_indices(const MultispectralStack& stack);

// [n_valid x n_wavelengths] spectra of the valid pixels.
Matrix masked_spectra(const MultispectralStack& stack);

// Rows (into masked_spectra order) of the pixels in roi AND valid_mask.
std::vector<int> roi_rows(const MultispectralStack& stack, const RoiMask& roi);

}  // namespace snerv
