#include "snerv/types.hpp"

#include <algorithm>
#include <cmath>

namespace snerv {

WavelengthGrid::WavelengthGrid(std::vector<double> wavelengths_nm)
    : wl_(std::move(wavelengths_nm)) {
  if (wl_.empty()) throw ConfigInvalid("wavelength grid is empty");
  for (std::size_t i = 0; i < wl_.size(); ++i) {
    if (!std::isfinite(wl_[i]) || wl_[i] < 600.0 || wl_[i] > 1100.0)
      throw ConfigInvalid("wavelength " + std::to_string(wl_[i]) +
                          " nm outside [600, 1100]");
    if (i > 0 && wl_[i] <= wl_[i - 1])
      throw ConfigInvalid("wavelength grid not strictly increasing");
  }
}

WavelengthGrid WavelengthGrid::default_grid() {
  std::vector<double> wl(28);
  for (int i = 0; i < 28; ++i) wl[i] = 700.0 + 10.0 * i;
  return WavelengthGrid(std::move(wl));
}

Spectrum MultispectralStack::spectrum_at(int r, int c) const {
  const int L = n_wavelengths();
  Spectrum s(L);
  const std::size_t base = pixel_index(r, c) * L;
  for (int w = 0; w < L; ++w) s[w] = data[base + w];
  return s;
}

void MultispectralStack::validate() const {
  if (height <= 0 || width <= 0)
    throw DimensionMismatch("stack has non-positive dimensions");
  if (pixel_spacing_mm <= 0.0)
    throw ConfigInvalid("pixel_spacing_mm must be > 0");
  const std::size_t L = grid.size();
  if (data.size() != n_pixels() * L)
    throw DimensionMismatch("stack data size does not match header");
  if (valid_mask.size() != n_pixels())
    throw DimensionMismatch("valid_mask size does not match header");
  for (std::size_t p = 0; p < n_pixels(); ++p) {
    if (!valid_mask[p]) continue;
    for (std::size_t w = 0; w < L; ++w)
      if (!std::isfinite(data[p * L + w]))
        throw ConfigInvalid("non-finite value on a valid pixel");
  }
}

std::size_t RoiMask::count() const {
  std::size_t n = 0;
  for (auto b : mask) n += (b != 0);
  return n;
}

void ChromophoreLibrary::add(const std::string& name, const Spectrum& s) {
  if (contains(name)) throw ConfigInvalid("duplicate chromophore: " + name);
  if (!wavelengths_nm.empty() &&
      s.size() != static_cast<Eigen::Index>(wavelengths_nm.size()))
    throw DimensionMismatch("chromophore " + name +
                            " length does not match library grid");
  if ((s.array() < 0.0).any())
    throw ConfigInvalid("chromophore " + name + " has negative values");
  if (s.lpNorm<Eigen::Infinity>() == 0.0)
    throw ConfigInvalid("chromophore " + name + " is identically zero");
  names_.push_back(name);
  spectra_.push_back(s);
}

bool ChromophoreLibrary::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const Spectrum& ChromophoreLibrary::spectrum(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw UnknownChromophore(name);
  return spectra_[static_cast<std::size_t>(it - names_.begin())];
}

Spectrum l2_normalize(const Spectrum& s) {
  const double n = s.norm();
  if (n == 0.0) throw ZeroSpectrum("cannot normalize the zero spectrum");
  return s / n;
}

double spectral_angle(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size())
    throw ShapeMismatch("spectral_angle: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw ZeroSpectrum("spectral_angle on zero spectrum");
  double c = a.dot(b) / (na * nb);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

MeanStd mean_spectrum(const MultispectralStack& stack, const RoiMask& roi,
                      SpectrumNorm norm) {
  if (roi.height != stack.height || roi.width != stack.width)
    throw ShapeMismatch("roi does not match stack dimensions");
  const int L = stack.n_wavelengths();
  Spectrum sum = Spectrum::Zero(L), sumsq = Spectrum::Zero(L);
  std::size_t used = 0, skipped = 0;
  for (int r = 0; r < stack.height; ++r) {
    for (int c = 0; c < stack.width; ++c) {
      if (!roi.at(r, c) || !stack.valid(r, c)) continue;
      Spectrum s = stack.spectrum_at(r, c);
      if (norm == SpectrumNorm::L2) {
        const double n = s.norm();
        if (n == 0.0) {
          ++skipped;
          continue;
        }
        s /= n;
      } else if (norm == SpectrumNorm::Max) {
        const double m = s.maxCoeff();
        if (m == 0.0) {
          ++skipped;
          continue;
        }
        s /= m;
      }
      sum += s;
      sumsq += s.cwiseProduct(s);
      ++used;
    }
  }
  if (used == 0) throw EmptyRoi("roi '" + roi.label + "' has no usable pixels");
  MeanStd out;
  out.mean = sum / static_cast<double>(used);
  Spectrum var = sumsq / static_cast<double>(used) -
                 out.mean.cwiseProduct(out.mean);
  out.std = var.cwiseMax(0.0).cwiseSqrt();
  out.n_used = used;
  out.n_skipped = skipped;
  return out;
}

std::vector<int> valid_pixel_indices(const MultispectralStack& stack) {
  std::vector<int> idx;
  idx.reserve(stack.n_pixels());
  for (std::size_t p = 0; p < stack.n_pixels(); ++p)
    if (stack.valid_mask[p]) idx.push_back(static_cast<int>(p));
  return idx;
}

Matrix masked_spectra(const MultispectralStack& stack) {
  const auto idx = valid_pixel_indices(stack);
  const int L = stack.n_wavelengths();
  Matrix S(static_cast<Eigen::Index>(idx.size()), L);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (int w = 0; w < L; ++w)
      S(static_cast<Eigen::Index>(i), w) =
          stack.data[static_cast<std::size_t>(idx[i]) * L + w];
  return S;
}

std::vector<int> roi_rows(const MultispectralStack& stack, const RoiMask& roi) {
  if (roi.height != stack.height || roi.width != stack.width)
    throw ShapeMismatch("roi does not match stack dimensions");
  std::vector<int> rows;
  int row = 0;
  for (std::size_t p = 0; p < stack.n_pixels(); ++p) {
    if (!stack.valid_mask[p]) continue;
    if (roi.mask[p]) rows.push_back(row);
    ++row;
  }
  return rows;
}

}  // namespace snerv
