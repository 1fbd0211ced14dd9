#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "snerv/clustering.hpp"
#include "snerv/phantom.hpp"
#include "snerv/probmodel.hpp"
#include "snerv/statmetrics.hpp"
#include "snerv/types.hpp"
#include "snerv/unmixing.hpp"

namespace snerv::pipeline {

namespace fs = std::filesystem;

struct StatOptions {
  int min_joint_support = 30;
  bool pcc_include_sentinels = false;
  // 0 = match each image's nerve ROI pixel count
  std::size_t reference_samples_per_image = 0;
};

struct ClusterOptions {
  bool weighted_ward = true;
  int cut_n_clusters = 6;
  double cut_height = -1.0;  // >= 0 overrides cut_n_clusters
  int n_leaf_correlations = 6;  // biggest leaves by pixel count
};

struct PipelineConfig {
  std::vector<fs::path> stacks;       // MSD base paths
  std::vector<fs::path> nerve_masks;  // aligned with stacks
  fs::path library;
  fs::path out;
  std::uint64_t seed = 1;
  unmixing::UnmixingConfig unmix;
  StatOptions stats;
  ClusterOptions cluster;
  bool force = false;
  bool strict_deterministic = true;

  // Relative paths in the JSON are resolved against base_dir.
  static PipelineConfig from_json(const nlohmann::json& j,
                                  const fs::path& base_dir);
  void validate() const;  // ConfigInvalid / MissingInput
};

// Dataset loaded once and shared between stages: pooled masked spectra with
// per-stack row offsets.
struct Dataset {
  std::vector<MultispectralStack> stacks;
  std::vector<RoiMask> nerve_masks;
  Matrix S;                        // pooled masked spectra
  std::vector<std::size_t> row_offset;  // per stack, into S
  std::vector<int> nerve_rows;     // pooled rows inside nerve ROIs
};

Dataset load_dataset(const PipelineConfig& cfg);

void cmd_phantom(const phantom::PhantomScene& scene,
                 const fs::path& library_csv, const fs::path& out_dir);
void cmd_unmix(const PipelineConfig& cfg);
void cmd_model(const PipelineConfig& cfg);
void cmd_reference(const PipelineConfig& cfg);
void cmd_correlate(const PipelineConfig& cfg);
void cmd_cluster(const PipelineConfig& cfg);
void cmd_report(const PipelineConfig& cfg);

// Matrices as CSV with component-id headers; undefined entries are empty
// cells (null in the JSON form).
std::string correlation_csv(const Matrix& m, const BoolMatrix& defined,
                            const std::vector<std::string>& labels);
nlohmann::json correlation_json(const statmetrics::CorrelationMatrices& cm,
                                const std::vector<std::string>& labels);

}  // namespace snerv::pipeline
