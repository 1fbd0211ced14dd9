#include "snerv/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "snerv/rng.hpp"

namespace snerv::phantom {

using nlohmann::json;

bool Region::contains(double col, double row) const {
  if (shape == Shape::Ellipse) {
    if (rx <= 0 || ry <= 0) return false;
    const double dx = (col - cx) / rx, dy = (row - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  }
  return col >= x && col < x + w && row >= y && row < y + h;
}

void PhantomScene::validate() const {
  if (height <= 0 || width <= 0)
    throw ConfigInvalid("scene has non-positive dimensions");
  if (pixel_spacing_mm <= 0) throw ConfigInvalid("pixel_spacing_mm must be > 0");
  if (noise_sigma < 0) throw ConfigInvalid("noise_sigma must be >= 0");
  if (background_attenuation < 0)
    throw ConfigInvalid("background_attenuation must be >= 0");
  for (const auto& reg : regions) {
    for (const auto& [name, conc] : reg.concentrations)
      if (conc < 0)
        throw ConfigInvalid("negative concentration for " + name);
    double lo_x, hi_x, lo_y, hi_y;
    if (reg.shape == Region::Shape::Ellipse) {
      lo_x = reg.cx - reg.rx;
      hi_x = reg.cx + reg.rx;
      lo_y = reg.cy - reg.ry;
      hi_y = reg.cy + reg.ry;
    } else {
      lo_x = reg.x;
      hi_x = reg.x + reg.w;
      lo_y = reg.y;
      hi_y = reg.y + reg.h;
    }
    if (lo_x < 0 || lo_y < 0 || hi_x > width || hi_y > height)
      throw ConfigInvalid("region extends outside the frame");
  }
}

PhantomScene scene_from_json(const json& j) {
  PhantomScene scene;
  scene.height = j.at("height").get<int>();
  scene.width = j.at("width").get<int>();
  scene.pixel_spacing_mm = j.value("pixel_spacing_mm", 0.1);
  scene.background_attenuation = j.value("background_attenuation", 0.0);
  scene.noise_sigma = j.value("noise_sigma", 0.0);
  scene.seed = j.value("seed", std::uint64_t{0});
  for (const auto& rj : j.value("regions", json::array())) {
    Region reg;
    const std::string shape = rj.value("shape", "ellipse");
    if (shape == "ellipse") {
      reg.shape = Region::Shape::Ellipse;
      reg.cx = rj.at("cx").get<double>();
      reg.cy = rj.at("cy").get<double>();
      reg.rx = rj.at("rx").get<double>();
      reg.ry = rj.at("ry").get<double>();
    } else if (shape == "rect") {
      reg.shape = Region::Shape::Rect;
      reg.x = rj.at("x").get<double>();
      reg.y = rj.at("y").get<double>();
      reg.w = rj.at("w").get<double>();
      reg.h = rj.at("h").get<double>();
    } else {
      throw ConfigInvalid("unknown region shape: " + shape);
    }
    const std::string mode = rj.value("mode", "set");
    if (mode == "set")
      reg.mode = Region::Mode::Set;
    else if (mode == "add")
      reg.mode = Region::Mode::Add;
    else
      throw ConfigInvalid("unknown region mode: " + mode);
    reg.label = rj.value("label", "");
    for (const auto& [name, conc] : rj.at("concentrations").items())
      reg.concentrations[name] = conc.get<double>();
    scene.regions.push_back(std::move(reg));
  }
  scene.validate();
  return scene;
}

json scene_to_json(const PhantomScene& scene) {
  json j = {{"height", scene.height},
            {"width", scene.width},
            {"pixel_spacing_mm", scene.pixel_spacing_mm},
            {"background_attenuation", scene.background_attenuation},
            {"noise_sigma", scene.noise_sigma},
            {"seed", scene.seed},
            {"regions", json::array()}};
  for (const auto& reg : scene.regions) {
    json rj;
    if (reg.shape == Region::Shape::Ellipse) {
      rj = {{"shape", "ellipse"}, {"cx", reg.cx}, {"cy", reg.cy},
            {"rx", reg.rx},       {"ry", reg.ry}};
    } else {
      rj = {{"shape", "rect"}, {"x", reg.x}, {"y", reg.y},
            {"w", reg.w},      {"h", reg.h}};
    }
    rj["mode"] = reg.mode == Region::Mode::Set ? "set" : "add";
    if (!reg.label.empty()) rj["label"] = reg.label;
    rj["concentrations"] = reg.concentrations;
    j["regions"].push_back(rj);
  }
  return j;
}

static Region rect(double x, double y, double w, double h,
                   std::map<std::string, double> conc,
                   std::string label = "") {
  Region r;
  r.shape = Region::Shape::Rect;
  r.x = x;
  r.y = y;
  r.w = w;
  r.h = h;
  r.concentrations = std::move(conc);
  r.label = std::move(label);
  return r;
}

static Region ellipse(double cx, double cy, double rx, double ry,
                      std::map<std::string, double> conc,
                      std::string label = "") {
  Region r;
  r.shape = Region::Shape::Ellipse;
  r.cx = cx;
  r.cy = cy;
  r.rx = rx;
  r.ry = ry;
  r.concentrations = std::move(conc);
  r.label = std::move(label);
  return r;
}

PhantomScene default_scene() {
  PhantomScene s;
  s.height = 256;
  s.width = 256;
  s.pixel_spacing_mm = 0.1;
  s.background_attenuation = 0.05;
  s.noise_sigma = 0.01;
  s.seed = 1;
  // skin line
  s.regions.push_back(
      rect(0, 6, 256, 8, {{"melanin", 0.6}, {"water", 0.5}}, "skin"));
  // subcutaneous fat
  s.regions.push_back(
      rect(0, 14, 256, 26, {{"lipid", 1.0}, {"water", 0.1}}, "fat"));
  // muscle
  s.regions.push_back(
      rect(0, 40, 256, 216, {{"HbO2", 0.4}, {"HHb", 0.1}, {"water", 0.5}},
           "muscle"));
  // nerve with intraneurial vessels
  s.regions.push_back(ellipse(
      128, 80, 30, 18,
      {{"HbO2", 0.5}, {"HHb", 0.1}, {"lipid", 0.5}, {"collagen", 0.7}, {"water", 0.3}},
      "nerve"));
  s.regions.push_back(ellipse(118, 76, 3, 3, {{"HbO2", 1.2}}, "vessel"));
  s.regions.push_back(ellipse(140, 86, 2.5, 2.5, {{"HHb", 0.9}}, "vessel"));
  // collateral artery and a vein beside the nerve
  s.regions.push_back(ellipse(78, 90, 6, 6, {{"HbO2", 1.5}}, "artery"));
  s.regions.push_back(ellipse(180, 92, 5, 5, {{"HHb", 1.0}}, "vein"));
  return s;
}

PhantomScene four_chromophore_scene() {
  PhantomScene s;
  s.height = 256;
  s.width = 256;
  s.pixel_spacing_mm = 0.1;
  s.background_attenuation = 0.03;
  s.noise_sigma = 0.01;
  s.seed = 1;
  s.regions.push_back(
      rect(0, 6, 256, 8, {{"collagen", 0.9}, {"water", 0.15}}, "skin"));
  s.regions.push_back(
      rect(0, 14, 256, 26, {{"lipid", 1.0}, {"water", 0.1}}, "fat"));
  s.regions.push_back(
      rect(0, 40, 256, 216, {{"HbO2", 0.5}, {"water", 0.5}}, "muscle"));
  // concentration diversity: without ratio variation inside the big tissue
  // layers the factorization is not identifiable
  {
    auto add = [&](Region r) {
      r.mode = Region::Mode::Add;
      s.regions.push_back(std::move(r));
    };
    add(rect(0, 18, 256, 6, {{"lipid", 0.5}}, "fat_band"));
    add(rect(64, 28, 128, 8, {{"water", 0.35}}, "fat_hydration"));
    add(rect(0, 10, 96, 4, {{"collagen", 0.5}}, "skin_band"));
    add(rect(0, 60, 256, 40, {{"HbO2", 0.25}}, "perfusion_band"));
    add(rect(0, 150, 256, 50, {{"HbO2", 0.45}}, "perfusion_band"));
    add(ellipse(48, 130, 22, 14, {{"water", 0.5}}, "edema"));
    add(ellipse(200, 210, 26, 16, {{"water", 0.35}, {"HbO2", 0.2}}, "edema"));
  }
  s.regions.push_back(ellipse(
      128, 80, 30, 18,
      {{"HbO2", 0.6}, {"lipid", 0.5}, {"collagen", 0.7}, {"water", 0.3}},
      "nerve"));
  s.regions.push_back(ellipse(118, 76, 3, 3, {{"HbO2", 1.2}}, "vessel"));
  s.regions.push_back(ellipse(78, 90, 6, 6, {{"HbO2", 1.5}}, "artery"));
  s.regions.push_back(ellipse(180, 92, 5, 5, {{"HbO2", 1.2}}, "artery"));
  // shallow near-pure anchors so every chromophore has a clean exemplar
  s.regions.push_back(ellipse(220, 60, 10, 8, {{"water", 1.2}}, "water_blob"));
  s.regions.push_back(ellipse(30, 60, 12, 9, {{"collagen", 1.2}}, "collagen_blob"));
  s.regions.push_back(ellipse(214, 110, 10, 8, {{"collagen", 1.0}}, "collagen_blob"));
  s.regions.push_back(ellipse(60, 26, 10, 8, {{"lipid", 1.3}}, "lipid_blob"));
  return s;
}

RoiMask builtin_nerve_mask(const PhantomScene& scene) {
  RoiMask mask;
  mask.label = "nerve";
  mask.height = scene.height;
  mask.width = scene.width;
  mask.mask.assign(static_cast<std::size_t>(scene.height) * scene.width, 0);
  for (const auto& reg : scene.regions) {
    if (reg.label != "nerve") continue;
    for (int r = 0; r < scene.height; ++r)
      for (int c = 0; c < scene.width; ++c)
        if (reg.contains(c + 0.5, r + 0.5))
          mask.mask[static_cast<std::size_t>(r) * scene.width + c] = 1;
  }
  return mask;
}

std::pair<MultispectralStack, GroundTruth> generate(
    const PhantomScene& scene, const ChromophoreLibrary& library,
    const WavelengthGrid& grid) {
  scene.validate();
  // chromophores actually used, in library order
  std::vector<std::string> used;
  for (const auto& name : library.names()) {
    bool found = false;
    for (const auto& reg : scene.regions)
      if (reg.concentrations.count(name)) found = true;
    if (found) used.push_back(name);
  }
  for (const auto& reg : scene.regions)
    for (const auto& [name, conc] : reg.concentrations)
      if (!library.contains(name)) throw UnknownChromophore(name);

  const int H = scene.height, W = scene.width;
  const int L = static_cast<int>(grid.size());
  const int C = static_cast<int>(used.size());
  Matrix eps(C, L);  // absorption of each used chromophore on the grid
  for (int c = 0; c < C; ++c) {
    const Spectrum& s = library.spectrum(used[c]);
    if (s.size() != L)
      throw DimensionMismatch("library grid does not match requested grid");
    eps.row(c) = s.transpose();
  }

  GroundTruth truth;
  truth.chromophores = used;
  truth.concentration_maps.assign(
      static_cast<std::size_t>(H) * W * std::max(C, 1), 0.0f);

  // paint regions
  for (int r = 0; r < H; ++r) {
    for (int col = 0; col < W; ++col) {
      const std::size_t base = (static_cast<std::size_t>(r) * W + col) * C;
      for (const auto& reg : scene.regions) {
        if (!reg.contains(col + 0.5, r + 0.5)) continue;
        if (reg.mode == Region::Mode::Set)
          for (int c = 0; c < C; ++c)
            truth.concentration_maps[base + c] = 0.0f;
        for (int c = 0; c < C; ++c) {
          auto it = reg.concentrations.find(used[c]);
          if (it != reg.concentrations.end())
            truth.concentration_maps[base + c] +=
                static_cast<float>(it->second);
        }
      }
    }
  }

  MultispectralStack stack;
  stack.height = H;
  stack.width = W;
  stack.pixel_spacing_mm = scene.pixel_spacing_mm;
  stack.grid = grid;
  stack.data.assign(static_cast<std::size_t>(H) * W * L, 0.0f);
  stack.valid_mask.assign(static_cast<std::size_t>(H) * W, 1);

  truth.fluence_map.assign(static_cast<std::size_t>(H) * W * L, 1.0f);
  truth.clean_stack = stack;

  // column-wise cumulative attenuation: mu_eff(r, col, l) =
  // background_attenuation * mu_a(r, col, l), averaged over rows 0..r
  std::vector<double> mu_a(L), att_sum(static_cast<std::size_t>(W) * L, 0.0);
  for (int r = 0; r < H; ++r) {
    const double depth_mm = r * scene.pixel_spacing_mm;
    for (int col = 0; col < W; ++col) {
      const std::size_t cbase = (static_cast<std::size_t>(r) * W + col) * C;
      for (int l = 0; l < L; ++l) {
        double m = 0.0;
        for (int c = 0; c < C; ++c)
          m += truth.concentration_maps[cbase + c] * eps(c, l);
        mu_a[l] = m;
      }
      const std::size_t abase = static_cast<std::size_t>(col) * L;
      const std::size_t pbase = (static_cast<std::size_t>(r) * W + col) * L;
      for (int l = 0; l < L; ++l) {
        att_sum[abase + l] += scene.background_attenuation * mu_a[l];
        const double mean_att = att_sum[abase + l] / (r + 1);
        const double fluence = std::exp(-depth_mm * mean_att);
        truth.fluence_map[pbase + l] = static_cast<float>(fluence);
        truth.clean_stack.data[pbase + l] =
            static_cast<float>(fluence * mu_a[l]);
      }
    }
  }

  // additive Gaussian noise, clamped at zero to keep the stack non-negative;
  // the counter-based stream makes the result order-independent
  for (std::size_t p = 0; p < static_cast<std::size_t>(H) * W; ++p) {
    for (int l = 0; l < L; ++l) {
      double v = truth.clean_stack.data[p * L + l];
      if (scene.noise_sigma > 0)
        v += scene.noise_sigma *
             counter_gaussian(scene.seed, p * static_cast<std::size_t>(L) + l);
      stack.data[p * L + l] = static_cast<float>(std::max(0.0, v));
    }
  }
  return {std::move(stack), std::move(truth)};
}

}  // namespace snerv::phantom
