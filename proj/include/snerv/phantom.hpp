#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snerv/types.hpp"

namespace snerv::phantom {

struct Region {
  enum class Shape { Ellipse, Rect };
  // "set" overwrites the pixel's concentrations (painter's order),
  // "add" accumulates on top of whatever earlier regions put there.
  enum class Mode { Set, Add };

  Shape shape = Shape::Ellipse;
  Mode mode = Mode::Set;
  // Ellipse: center (cx, cy) and radii (rx, ry), in pixels (cx lateral/col,
  // cy axial/row). Rect: top-left (x, y) and extent (w, h), in pixels.
  double cx = 0, cy = 0, rx = 0, ry = 0;
  double x = 0, y = 0, w = 0, h = 0;
  std::map<std::string, double> concentrations;
  std::string label;  // optional structure name (e.g. "nerve")

  bool contains(double col, double row) const;
};

struct PhantomScene {
  int height = 256;
  int width = 256;
  double pixel_spacing_mm = 0.1;
  std::vector<Region> regions;
  // Effective attenuation per unit of local absorption, 1/mm. The fluence at
  // depth d is exp(-d * mean of (background_attenuation * mu_a) over the
  // pixel's depth column), so deeper pixels see a spectrally colored loss.
  double background_attenuation = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // ConfigInvalid
};

struct GroundTruth {
  std::vector<std::string> chromophores;
  // [height][width][chromophore]
  std::vector<float> concentration_maps;
  // [height][width][wavelength]
  std::vector<float> fluence_map;
  MultispectralStack clean_stack;
};

PhantomScene scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const PhantomScene& scene);

// Layered scene after the anatomy the toolkit targets: skin line
// (melanin + water), subcutaneous fat (lipid), muscle (blood + water), a
// nerve (blood + lipid + collagen + water) with intraneurial vessels.
PhantomScene default_scene();

// Same layering restricted to HbO2 / lipid / collagen / water, used for
// component-recovery checks.
PhantomScene four_chromophore_scene();

// Ellipse masks for the named structures of the built-in scenes.
RoiMask builtin_nerve_mask(const PhantomScene& scene);

std::pair<MultispectralStack, GroundTruth> generate(
    const PhantomScene& scene, const ChromophoreLibrary& library,
    const WavelengthGrid& grid = WavelengthGrid::default_grid());

}  // namespace snerv::phantom
