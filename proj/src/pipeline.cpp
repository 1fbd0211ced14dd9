#include "snerv/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "snerv/io.hpp"
#include "snerv/rng.hpp"
#include "snerv/svg.hpp"

namespace snerv::pipeline {

using nlohmann::json;

namespace {

std::string stack_tag(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", i);
  return buf;
}

std::vector<std::string> component_labels(int k) {
  std::vector<std::string> labels;
  for (int j = 1; j <= k; ++j) labels.push_back("c" + std::to_string(j));
  return labels;
}

fs::file_time_type mtime(const fs::path& p) {
  if (!fs::exists(p)) throw MissingInput("missing artifact: " + p.string());
  return fs::last_write_time(p);
}

// A stage's upstream artifacts must be at least as new as the primary
// inputs they were derived from.
void require_fresh(const std::vector<fs::path>& upstream,
                   const std::vector<fs::path>& inputs, bool force) {
  fs::file_time_type oldest_up = fs::file_time_type::max();
  for (const auto& p : upstream) oldest_up = std::min(oldest_up, mtime(p));
  if (force) return;
  for (const auto& p : inputs) {
    if (fs::exists(p) && fs::last_write_time(p) > oldest_up)
      throw UpstreamStale("input " + p.string() +
                          " is newer than derived artifacts; rerun upstream "
                          "stages or pass --force");
  }
}

std::vector<fs::path> stack_files(const PipelineConfig& cfg) {
  std::vector<fs::path> files;
  for (const auto& base : cfg.stacks) {
    fs::path j = base, r = base;
    j += ".json";
    r += ".raw";
    files.push_back(j);
    files.push_back(r);
  }
  return files;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j,
                                         const fs::path& base_dir) {
  PipelineConfig cfg;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  for (const auto& s : j.value("stacks", json::array()))
    cfg.stacks.push_back(resolve(s.get<std::string>()));
  for (const auto& s : j.value("nerve_masks", json::array()))
    cfg.nerve_masks.push_back(resolve(s.get<std::string>()));
  if (j.contains("library")) cfg.library = resolve(j.at("library"));
  if (j.contains("out")) cfg.out = resolve(j.at("out"));
  cfg.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("unmixing")) {
    const auto& u = j.at("unmixing");
    cfg.unmix.k = u.value("k", cfg.unmix.k);
    cfg.unmix.lambda1 = u.value("lambda1", cfg.unmix.lambda1);
    cfg.unmix.lambdaF = u.value("lambdaF", cfg.unmix.lambdaF);
    cfg.unmix.max_iters = u.value("max_iters", cfg.unmix.max_iters);
    cfg.unmix.rel_tol = u.value("rel_tol", cfg.unmix.rel_tol);
    cfg.unmix.init = u.value("init", cfg.unmix.init);
    cfg.unmix.row_max_normalize =
        u.value("row_max_normalize", cfg.unmix.row_max_normalize);
    cfg.unmix.seed = u.value("seed", cfg.seed);
  } else {
    cfg.unmix.seed = cfg.seed;
  }
  if (j.contains("statmetrics")) {
    const auto& s = j.at("statmetrics");
    cfg.stats.min_joint_support =
        s.value("min_joint_support", cfg.stats.min_joint_support);
    cfg.stats.pcc_include_sentinels =
        s.value("pcc_include_sentinels", cfg.stats.pcc_include_sentinels);
    cfg.stats.reference_samples_per_image = s.value(
        "reference_samples_per_image", cfg.stats.reference_samples_per_image);
  }
  if (j.contains("clustering")) {
    const auto& c = j.at("clustering");
    cfg.cluster.weighted_ward =
        c.value("weighted_ward", cfg.cluster.weighted_ward);
    cfg.cluster.cut_n_clusters =
        c.value("cut_n_clusters", cfg.cluster.cut_n_clusters);
    cfg.cluster.cut_height = c.value("cut_height", cfg.cluster.cut_height);
    cfg.cluster.n_leaf_correlations =
        c.value("n_leaf_correlations", cfg.cluster.n_leaf_correlations);
  }
  return cfg;
}

void PipelineConfig::validate() const {
  unmix.validate();
  if (stacks.empty()) throw ConfigInvalid("no stacks configured");
  if (!nerve_masks.empty() && nerve_masks.size() != stacks.size())
    throw ConfigInvalid("nerve_masks must align with stacks");
  if (out.empty()) throw ConfigInvalid("no output directory configured");
  if (stats.min_joint_support < 1)
    throw ConfigInvalid("min_joint_support must be >= 1");
  for (const auto& base : stacks) {
    fs::path j = base;
    j += ".json";
    if (!fs::exists(j)) throw MissingInput("stack not found: " + j.string());
  }
  for (const auto& base : nerve_masks) {
    fs::path j = base;
    j += ".json";
    if (!fs::exists(j)) throw MissingInput("mask not found: " + j.string());
  }
  if (!library.empty() && !fs::exists(library))
    throw MissingInput("library not found: " + library.string());
}

Dataset load_dataset(const PipelineConfig& cfg) {
  Dataset ds;
  std::size_t offset = 0;
  std::vector<Matrix> parts;
  for (std::size_t i = 0; i < cfg.stacks.size(); ++i) {
    ds.stacks.push_back(io::read_stack(cfg.stacks[i]));
    ds.row_offset.push_back(offset);
    parts.push_back(masked_spectra(ds.stacks.back()));
    if (!cfg.nerve_masks.empty()) {
      ds.nerve_masks.push_back(io::read_mask(cfg.nerve_masks[i]));
      for (int r : roi_rows(ds.stacks.back(), ds.nerve_masks.back()))
        ds.nerve_rows.push_back(static_cast<int>(offset) + r);
    }
    offset += static_cast<std::size_t>(parts.back().rows());
  }
  const Eigen::Index L = parts.empty() ? 0 : parts.front().cols();
  ds.S.resize(static_cast<Eigen::Index>(offset), L);
  Eigen::Index row = 0;
  for (const auto& p : parts) {
    ds.S.middleRows(row, p.rows()) = p;
    row += p.rows();
  }
  return ds;
}

void cmd_phantom(const phantom::PhantomScene& scene,
                 const fs::path& library_csv, const fs::path& out_dir) {
  const auto library = io::read_library_csv(library_csv);
  auto [stack, truth] = phantom::generate(scene, library);
  fs::create_directories(out_dir);
  io::write_stack(stack, out_dir / "stack");
  io::write_stack(truth.clean_stack, out_dir / "clean");
  io::write_mask(phantom::builtin_nerve_mask(scene), out_dir / "nerve_mask");
  io::write_json_atomic(out_dir / "scene.json", phantom::scene_to_json(scene));

  // ground-truth concentrations, one column per chromophore
  const int C = static_cast<int>(truth.chromophores.size());
  Matrix conc(static_cast<Eigen::Index>(stack.n_pixels()), std::max(C, 1));
  conc.setZero();
  for (std::size_t p = 0; p < stack.n_pixels(); ++p)
    for (int c = 0; c < C; ++c)
      conc(static_cast<Eigen::Index>(p), c) =
          truth.concentration_maps[p * static_cast<std::size_t>(C) + c];
  io::write_matrix(conc, out_dir / "concentrations",
                   {{"chromophores", truth.chromophores},
                    {"order", "row-major-all-pixels"}});
  io::write_json_atomic(out_dir / "manifest.json",
                        {{"stack", "stack"},
                         {"clean", "clean"},
                         {"nerve_mask", "nerve_mask"},
                         {"concentrations", "concentrations"},
                         {"chromophores", truth.chromophores}});
}

void cmd_unmix(const PipelineConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg);
  auto result = unmixing::fit(ds.S, cfg.unmix);

  const fs::path dir = cfg.out / "unmix";
  fs::create_directories(dir);
  io::write_matrix(result.H, dir / "H",
                   {{"component_ids", component_labels(cfg.unmix.k)},
                    {"wavelengths_nm", ds.stacks.front().grid.values()}});

  // component spectra in the interchange CSV format
  {
    std::ostringstream csv;
    csv << "wavelength_nm";
    for (const auto& id : component_labels(cfg.unmix.k)) csv << "," << id;
    csv << "\n";
    const auto& wl = ds.stacks.front().grid.values();
    for (std::size_t l = 0; l < wl.size(); ++l) {
      csv << io::format_double(wl[l]);
      for (int j = 0; j < cfg.unmix.k; ++j)
        csv << "," << io::format_double(result.H(j, static_cast<Eigen::Index>(l)));
      csv << "\n";
    }
    io::write_file_atomic(dir / "H.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "iteration,objective\n";
    for (std::size_t i = 0; i < result.objective_trace.size(); ++i)
      csv << i << "," << io::format_double(result.objective_trace[i]) << "\n";
    io::write_file_atomic(dir / "trace.csv", csv.str());
  }

  for (std::size_t i = 0; i < ds.stacks.size(); ++i) {
    const std::size_t n = static_cast<std::size_t>(
        (i + 1 < ds.row_offset.size() ? ds.row_offset[i + 1]
                                      : static_cast<std::size_t>(ds.S.rows())) -
        ds.row_offset[i]);
    Matrix Wi = unmixing::transform(
        ds.S.middleRows(static_cast<Eigen::Index>(ds.row_offset[i]),
                        static_cast<Eigen::Index>(n)),
        result.H, cfg.unmix);
    io::write_matrix(Wi, dir / ("W_" + stack_tag(i)),
                     {{"component_ids", component_labels(cfg.unmix.k)},
                      {"stack", cfg.stacks[i].filename().string()},
                      {"order", "valid-mask-row-major"}});
  }

  io::write_json_atomic(dir / "meta.json",
                        {{"k", cfg.unmix.k},
                         {"lambda1", cfg.unmix.lambda1},
                         {"lambdaF", cfg.unmix.lambdaF},
                         {"seed", cfg.unmix.seed},
                         {"init", cfg.unmix.init},
                         {"n_spectra", ds.S.rows()},
                         {"n_stacks", ds.stacks.size()},
                         {"relative_error", result.relative_error},
                         {"converged", result.converged},
                         {"iterations", result.objective_trace.size() - 1}});
}

namespace {

probmodel::StandardizedCoefficients load_standardized(
    const PipelineConfig& cfg, const Dataset& ds) {
  const fs::path dir = cfg.out / "model";
  probmodel::StandardizedCoefficients zc;
  zc.Z.resize(ds.S.rows(), cfg.unmix.k);
  zc.M.resize(ds.S.rows(), cfg.unmix.k);
  for (std::size_t i = 0; i < ds.stacks.size(); ++i) {
    Matrix Zi = io::read_matrix(dir / ("Z_" + stack_tag(i)));
    BoolMatrix Mi = io::read_bool_matrix(dir / ("M_" + stack_tag(i)));
    zc.Z.middleRows(static_cast<Eigen::Index>(ds.row_offset[i]), Zi.rows()) = Zi;
    zc.M.middleRows(static_cast<Eigen::Index>(ds.row_offset[i]), Mi.rows()) = Mi;
  }
  return zc;
}

std::vector<int> load_reference_rows(const PipelineConfig& cfg,
                                     const Dataset& ds) {
  const fs::path dir = cfg.out / "reference";
  std::vector<int> rows;
  for (std::size_t i = 0; i < ds.stacks.size(); ++i) {
    RoiMask ref = io::read_mask(dir / ("refmask_" + stack_tag(i)));
    for (int r : roi_rows(ds.stacks[i], ref))
      rows.push_back(static_cast<int>(ds.row_offset[i]) + r);
  }
  return rows;
}

}  // namespace

void cmd_model(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path unmix_dir = cfg.out / "unmix";
  require_fresh({unmix_dir / "meta.json", unmix_dir / "H.json"},
                stack_files(cfg), cfg.force);
  Dataset ds = load_dataset(cfg);

  Matrix W(ds.S.rows(), cfg.unmix.k);
  for (std::size_t i = 0; i < ds.stacks.size(); ++i) {
    Matrix Wi = io::read_matrix(unmix_dir / ("W_" + stack_tag(i)));
    if (Wi.cols() != cfg.unmix.k)
      throw ModelMismatch("W component count differs from configured k");
    W.middleRows(static_cast<Eigen::Index>(ds.row_offset[i]), Wi.rows()) = Wi;
  }

  auto models = probmodel::fit_component_models(W);
  auto zc = probmodel::standardize(W, models);

  const fs::path dir = cfg.out / "model";
  fs::create_directories(dir);
  json mj = json::array();
  for (const auto& m : models)
    mj.push_back({{"p", m.p},
                  {"beta", m.beta},
                  {"mu", m.mu},
                  {"sigma", m.sigma},
                  {"n_nonzero", m.n_nonzero},
                  {"n_total", m.n_total},
                  {"has_continuous", m.has_continuous}});
  io::write_json_atomic(dir / "models.json", mj);

  for (std::size_t i = 0; i < ds.stacks.size(); ++i) {
    const Eigen::Index begin = static_cast<Eigen::Index>(ds.row_offset[i]);
    const Eigen::Index n =
        (i + 1 < ds.row_offset.size()
             ? static_cast<Eigen::Index>(ds.row_offset[i + 1])
             : ds.S.rows()) -
        begin;
    io::write_matrix(zc.Z.middleRows(begin, n), dir / ("Z_" + stack_tag(i)),
                     {{"stack", cfg.stacks[i].filename().string()},
                      {"order", "valid-mask-row-major"}});
    io::write_bool_matrix(zc.M.middleRows(begin, n),
                          dir / ("M_" + stack_tag(i)),
                          {{"stack", cfg.stacks[i].filename().string()},
                           {"order", "valid-mask-row-major"}});
  }
}

void cmd_reference(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.nerve_masks.empty())
    throw ConfigInvalid("reference stage requires nerve_masks");
  Dataset ds = load_dataset(cfg);
  auto sampler = statmetrics::fit_reference_sampler(ds.nerve_masks);

  const fs::path dir = cfg.out / "reference";
  fs::create_directories(dir);
  io::write_json_atomic(dir / "sampler.json",
                        {{"mu_lat", sampler.mu_lat},
                         {"mu_ax", sampler.mu_ax},
                         {"sigma_lat", sampler.sigma_lat},
                         {"sigma_ax", sampler.sigma_ax},
                         {"n_pixels", sampler.n_pixels}});
  for (std::size_t i = 0; i < ds.stacks.size(); ++i) {
    std::size_t n = cfg.stats.reference_samples_per_image;
    if (n == 0) n = roi_rows(ds.stacks[i], ds.nerve_masks[i]).size();
    if (n == 0) throw EmptyRoi("nerve ROI empty in stack " + stack_tag(i));
    auto ref = statmetrics::sample_reference_roi(
        sampler, ds.stacks[i], ds.nerve_masks[i], n,
        splitmix64(cfg.seed) + i);
    io::write_mask(ref.mask, dir / ("refmask_" + stack_tag(i)));
  }
}

std::string correlation_csv(const Matrix& m, const BoolMatrix& defined,
                            const std::vector<std::string>& labels) {
  std::ostringstream out;
  out << "component";
  for (const auto& l : labels) out << "," << l;
  out << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << ",";
      if (defined(i, j)) out << io::format_double(m(i, j));
    }
    out << "\n";
  }
  return out.str();
}

json correlation_json(const statmetrics::CorrelationMatrices& cm,
                      const std::vector<std::string>& labels) {
  auto mat = [&](const Matrix& m, const BoolMatrix& defined) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        row.push_back(defined(i, j) ? json(m(i, j)) : json(nullptr));
      rows.push_back(row);
    }
    return rows;
  };
  json counts = json::array();
  for (Eigen::Index i = 0; i < cm.support_counts.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < cm.support_counts.cols(); ++j)
      row.push_back(cm.support_counts(i, j));
    counts.push_back(row);
  }
  return {{"components", labels},
          {"dsc", mat(cm.dsc, cm.dsc_defined)},
          {"pcc", mat(cm.pcc, cm.pcc_defined)},
          {"support_counts", counts}};
}

void cmd_correlate(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.nerve_masks.empty())
    throw ConfigInvalid("correlate stage requires nerve_masks");
  const fs::path model_dir = cfg.out / "model";
  const fs::path ref_dir = cfg.out / "reference";
  require_fresh({model_dir / "models.json", ref_dir / "sampler.json"},
                stack_files(cfg), cfg.force);

  Dataset ds = load_dataset(cfg);
  auto zc = load_standardized(cfg, ds);
  auto ref_rows = load_reference_rows(cfg, ds);

  statmetrics::PearsonOptions opts;
  opts.min_joint_support = cfg.stats.min_joint_support;
  opts.include_sentinels = cfg.stats.pcc_include_sentinels;

  auto nerve = statmetrics::correlation_matrices(zc, opts, ds.nerve_rows);
  auto reference = statmetrics::correlation_matrices(zc, opts, ref_rows);
  auto diff = statmetrics::difference_matrices(nerve, reference);

  const auto labels = component_labels(cfg.unmix.k);
  const fs::path dir = cfg.out / "correlate";
  fs::create_directories(dir);
  io::write_file_atomic(dir / "nerve_dsc.csv",
                        correlation_csv(nerve.dsc, nerve.dsc_defined, labels));
  io::write_file_atomic(dir / "nerve_pcc.csv",
                        correlation_csv(nerve.pcc, nerve.pcc_defined, labels));
  io::write_file_atomic(
      dir / "reference_dsc.csv",
      correlation_csv(reference.dsc, reference.dsc_defined, labels));
  io::write_file_atomic(
      dir / "reference_pcc.csv",
      correlation_csv(reference.pcc, reference.pcc_defined, labels));
  io::write_file_atomic(dir / "diff_dsc.csv",
                        correlation_csv(diff.dsc, diff.dsc_defined, labels));
  io::write_file_atomic(dir / "diff_pcc.csv",
                        correlation_csv(diff.pcc, diff.pcc_defined, labels));
  io::write_json_atomic(dir / "correlations.json",
                        {{"nerve", correlation_json(nerve, labels)},
                         {"reference", correlation_json(reference, labels)},
                         {"difference", correlation_json(diff, labels)}});
  io::write_file_atomic(
      dir / "dsc.svg",
      svg::heatmap_pair(nerve.dsc, nerve.dsc_defined, diff.dsc,
                        diff.dsc_defined, labels, "nerve DSC",
                        "nerve - reference", -1.0, 1.0));
  io::write_file_atomic(
      dir / "pcc.svg",
      svg::heatmap_pair(nerve.pcc, nerve.pcc_defined, diff.pcc,
                        diff.pcc_defined, labels, "nerve PCC",
                        "nerve - reference", -1.0, 1.0));
}

void cmd_cluster(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path model_dir = cfg.out / "model";
  const fs::path ref_dir = cfg.out / "reference";
  require_fresh({model_dir / "models.json"}, stack_files(cfg), cfg.force);

  Dataset ds = load_dataset(cfg);
  auto zc = load_standardized(cfg, ds);
  auto enumeration = clustering::enumerate_classes(zc.M, ds.S);
  auto tree =
      clustering::build_tree(enumeration.classes, cfg.cluster.weighted_ward);
  const auto order = clustering::leaf_order(tree);

  const fs::path dir = cfg.out / "cluster";
  fs::create_directories(dir);

  json leaves = json::array();
  for (const auto& leaf : tree.leaves) {
    json rep = json::array();
    for (Eigen::Index l = 0; l < leaf.representative.size(); ++l)
      rep.push_back(leaf.representative[l]);
    leaves.push_back({{"pattern", leaf.pattern},
                      {"count", leaf.count},
                      {"representative", rep}});
  }
  json merges = json::array();
  for (const auto& m : tree.merges)
    merges.push_back({m.left, m.right, m.height, m.size});
  io::write_json_atomic(
      dir / "tree.json",
      {{"leaves", leaves},
       {"merges", merges},
       {"weighted", tree.weighted},
       {"leaf_order", order},
       {"empty_pattern_count", enumeration.empty_pattern_pixels.size()}});

  // fingerprints (whole dataset, nerve, reference when available)
  std::vector<clustering::SpectralFingerprint> fps;
  std::vector<int> all_rows(static_cast<std::size_t>(ds.S.rows()));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  fps.push_back(
      clustering::fingerprint(tree, enumeration, all_rows, "dataset"));
  std::vector<int> ref_rows;
  if (!ds.nerve_rows.empty())
    fps.push_back(
        clustering::fingerprint(tree, enumeration, ds.nerve_rows, "nerve"));
  if (fs::exists(ref_dir / "sampler.json")) {
    ref_rows = load_reference_rows(cfg, ds);
    fps.push_back(
        clustering::fingerprint(tree, enumeration, ref_rows, "reference"));
  }
  {
    std::ostringstream csv;
    csv << "position,leaf,pattern,count";
    for (const auto& fp : fps) csv << "," << fp.label;
    csv << "\n";
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const int leaf = order[pos];
      csv << pos << "," << leaf << ","
          << tree.leaves[static_cast<std::size_t>(leaf)].pattern << ","
          << tree.leaves[static_cast<std::size_t>(leaf)].count;
      for (const auto& fp : fps)
        csv << "," << io::format_double(fp.weights[pos]);
      csv << "\n";
    }
    io::write_file_atomic(dir / "fingerprints.csv", csv.str());
  }

  // cut + mean shapes per cluster
  std::vector<int> cut =
      cfg.cluster.cut_height >= 0.0
          ? clustering::cut_tree_height(tree, cfg.cluster.cut_height)
          : clustering::cut_tree(
                tree, std::min(cfg.cluster.cut_n_clusters,
                               static_cast<int>(tree.leaves.size())));
  {
    std::ostringstream csv;
    csv << "leaf,pattern,cluster\n";
    for (std::size_t i = 0; i < cut.size(); ++i)
      csv << i << "," << tree.leaves[i].pattern << "," << cut[i] << "\n";
    io::write_file_atomic(dir / "clusters.csv", csv.str());
  }
  {
    const int n_clusters =
        cut.empty() ? 0 : *std::max_element(cut.begin(), cut.end()) + 1;
    std::vector<svg::LineSeries> series;
    std::ostringstream csv;
    csv << "cluster,wavelength_nm,mean,std\n";
    const auto& wl = ds.stacks.front().grid.values();
    for (int c = 0; c < n_clusters; ++c) {
      std::vector<int> members;
      for (std::size_t leaf = 0; leaf < cut.size(); ++leaf)
        if (cut[leaf] == c)
          members.insert(members.end(), tree.leaves[leaf].pixel_ids.begin(),
                         tree.leaves[leaf].pixel_ids.end());
      if (members.empty()) continue;
      auto shape = clustering::cluster_mean_shape(ds.S, members);
      svg::LineSeries s;
      s.label = "C" + std::to_string(c + 1);
      for (std::size_t l = 0; l < wl.size(); ++l) {
        s.x.push_back(wl[l]);
        s.y.push_back(shape.mean[static_cast<Eigen::Index>(l)]);
        s.band.push_back(shape.std[static_cast<Eigen::Index>(l)]);
        csv << c << "," << io::format_double(wl[l]) << ","
            << io::format_double(shape.mean[static_cast<Eigen::Index>(l)])
            << ","
            << io::format_double(shape.std[static_cast<Eigen::Index>(l)])
            << "\n";
      }
      series.push_back(std::move(s));
    }
    io::write_file_atomic(dir / "cluster_shapes.csv", csv.str());
    io::write_file_atomic(
        dir / "cluster_shapes.svg",
        svg::line_plot(series, "cluster mean spectral shapes",
                       "wavelength [nm]", "normalized signal"));
  }

  // correlations inside the biggest leaves
  {
    std::vector<int> by_count(tree.leaves.size());
    std::iota(by_count.begin(), by_count.end(), 0);
    std::stable_sort(by_count.begin(), by_count.end(), [&](int a, int b) {
      return tree.leaves[static_cast<std::size_t>(a)].count >
             tree.leaves[static_cast<std::size_t>(b)].count;
    });
    const int n_leaves = std::min<int>(cfg.cluster.n_leaf_correlations,
                                       static_cast<int>(by_count.size()));
    statmetrics::PearsonOptions opts;
    opts.min_joint_support = cfg.stats.min_joint_support;
    opts.include_sentinels = cfg.stats.pcc_include_sentinels;
    json out = json::array();
    for (int i = 0; i < n_leaves; ++i) {
      const int leaf = by_count[static_cast<std::size_t>(i)];
      auto lc = clustering::leaf_correlations(
          tree, {leaf}, zc, ds.nerve_rows.empty() ? all_rows : ds.nerve_rows,
          ref_rows, opts);
      std::vector<std::string> labels;
      for (int comp : lc.components) labels.push_back("c" + std::to_string(comp + 1));
      out.push_back(
          {{"leaf", leaf},
           {"pattern", tree.leaves[static_cast<std::size_t>(leaf)].pattern},
           {"count", tree.leaves[static_cast<std::size_t>(leaf)].count},
           {"roi", correlation_json(lc.roi, labels)},
           {"reference", correlation_json(lc.reference, labels)},
           {"difference", correlation_json(lc.difference, labels)}});
    }
    io::write_json_atomic(dir / "leaf_correlations.json", out);
  }

  io::write_file_atomic(dir / "dendrogram.svg",
                        svg::polar_dendrogram(tree, fps, "mixture-class tree"));
}

void cmd_report(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path unmix_dir = cfg.out / "unmix";
  require_fresh({unmix_dir / "meta.json"}, stack_files(cfg), cfg.force);
  json meta = io::read_json(unmix_dir / "meta.json");
  Matrix H = io::read_matrix(unmix_dir / "H");

  std::ostringstream md;
  md << "# Spectral analysis report\n\n";
  md << "## Unmixing\n\n";
  md << "- components: " << meta["k"] << "\n";
  md << "- lambda1: " << meta["lambda1"] << ", lambdaF: " << meta["lambdaF"]
     << "\n";
  md << "- spectra: " << meta["n_spectra"] << " across " << meta["n_stacks"]
     << " stack(s)\n";
  md << "- relative error ||S-WH||_F^2 / ||S||_F^2: "
     << meta["relative_error"] << "\n";
  md << "- converged: " << meta["converged"] << " after "
     << meta["iterations"] << " iterations\n\n";

  if (!cfg.library.empty()) {
    auto library = io::read_library_csv(cfg.library);
    bool any_zero = false;
    for (Eigen::Index j = 0; j < H.rows(); ++j)
      if (H.row(j).norm() == 0.0) any_zero = true;
    md << "## Component identification\n\n";
    if (any_zero) {
      md << "(skipped: some components are identically zero)\n\n";
    } else {
      auto matches = unmixing::match_components(H, library);
      md << "| component | chromophore | spectral angle [rad] |\n";
      md << "|---|---|---|\n";
      for (const auto& m : matches)
        md << "| c" << (m.component + 1) << " | " << m.chromophore << " | "
           << io::format_double(m.angle) << " |\n";
      md << "\n";
    }
  }

  const fs::path model_path = cfg.out / "model" / "models.json";
  if (fs::exists(model_path)) {
    json models = io::read_json(model_path);
    md << "## Component models\n\n";
    md << "| component | p | beta | mu | sigma | n_nonzero |\n";
    md << "|---|---|---|---|---|---|\n";
    int j = 1;
    for (const auto& m : models) {
      md << "| c" << j++ << " | " << m["p"] << " | ";
      if (m["has_continuous"].get<bool>())
        md << m["beta"] << " | " << m["mu"] << " | " << m["sigma"];
      else
        md << "- | - | -";
      md << " | " << m["n_nonzero"] << " |\n";
    }
    md << "\n";
  }

  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset='utf-8'>"
          "<title>Spectral analysis report</title></head><body>\n";
  html << "<pre>\n" << md.str() << "</pre>\n";
  for (const char* rel :
       {"correlate/dsc.svg", "correlate/pcc.svg", "cluster/dendrogram.svg",
        "cluster/cluster_shapes.svg"}) {
    const fs::path p = cfg.out / rel;
    if (!fs::exists(p)) continue;
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    html << "<div>" << ss.str() << "</div>\n";
  }
  html << "</body></html>\n";

  const fs::path dir = cfg.out / "report";
  fs::create_directories(dir);
  io::write_file_atomic(dir / "report.md", md.str());
  io::write_file_atomic(dir / "report.html", html.str());
}

}  // namespace snerv::pipeline
