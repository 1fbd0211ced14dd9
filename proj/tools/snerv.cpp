#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "snerv/errors.hpp"
#include "snerv/io.hpp"
#include "snerv/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int thread_count() {
  if (const char* env = std::getenv("SNERV_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end && *end == '\0' && n >= 1) return static_cast<int>(n);
    throw snerv::ConfigInvalid("SNERV_THREADS must be a positive integer");
  }
  return 1;
}

struct CommonArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  bool force = false;
  bool strict_deterministic = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "pipeline config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "base RNG seed (overrides config)")
      ->each([&](const std::string&) { args.has_seed = true; });
  cmd->add_flag("--force", args.force, "skip staleness checks");
  cmd->add_flag("--strict-deterministic", args.strict_deterministic,
                "force single-threaded numerics");
}

snerv::pipeline::PipelineConfig load_config(const CommonArgs& args) {
  const fs::path path(args.config);
  auto cfg = snerv::pipeline::PipelineConfig::from_json(
      snerv::io::read_json(path), path.parent_path());
  if (!args.out.empty()) cfg.out = fs::path(args.out);
  if (args.has_seed) {
    cfg.seed = args.seed;
    cfg.unmix.seed = args.seed;
  }
  cfg.force = args.force;
  cfg.strict_deterministic = cfg.strict_deterministic || args.strict_deterministic;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral nerve analysis pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string phantom_out = "phantom";

  auto* c_phantom = app.add_subcommand("phantom", "generate a synthetic stack");
  add_common(c_phantom, args);
  c_phantom->add_option("--phantom-out", phantom_out,
                        "phantom output subdirectory");
  auto* c_unmix = app.add_subcommand("unmix", "fit NMF components");
  auto* c_model = app.add_subcommand("model", "fit probabilistic models");
  auto* c_reference =
      app.add_subcommand("reference", "sample reference ROIs");
  auto* c_correlate =
      app.add_subcommand("correlate", "DSC/PCC correlation matrices");
  auto* c_cluster = app.add_subcommand("cluster", "mixture-class dendrogram");
  auto* c_report = app.add_subcommand("report", "assemble the HTML report");
  for (auto* cmd : {c_unmix, c_model, c_reference, c_correlate, c_cluster,
                    c_report})
    add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load_config(args);
    Eigen::setNbThreads(cfg.strict_deterministic ? 1 : thread_count());

    if (c_phantom->parsed()) {
      const json j = snerv::io::read_json(args.config);
      if (!j.contains("phantom"))
        throw snerv::ConfigInvalid("config has no \"phantom\" section");
      auto scene = snerv::phantom::scene_from_json(j.at("phantom"));
      if (args.has_seed) scene.seed = args.seed;
      snerv::pipeline::cmd_phantom(scene, cfg.library, cfg.out / phantom_out);
    } else if (c_unmix->parsed()) {
      snerv::pipeline::cmd_unmix(cfg);
    } else if (c_model->parsed()) {
      snerv::pipeline::cmd_model(cfg);
    } else if (c_reference->parsed()) {
      snerv::pipeline::cmd_reference(cfg);
    } else if (c_correlate->parsed()) {
      snerv::pipeline::cmd_correlate(cfg);
    } else if (c_cluster->parsed()) {
      snerv::pipeline::cmd_cluster(cfg);
    } else if (c_report->parsed()) {
      snerv::pipeline::cmd_report(cfg);
    }
  } catch (const snerv::Error& e) {
    std::cerr << json{{"error", {{"type", e.name()}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error",
                       {{"type", "Internal"}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 2;
  }
  return 0;
}
