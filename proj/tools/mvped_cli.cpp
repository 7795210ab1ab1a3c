// mvped: unsupervised multi-view pedestrian localization on voxel grids.
//
// Subcommands: synth, segment, fit, detect, eval, pipeline. All behavior is
// controlled by one JSON config plus an optional --seed override; flags
// carry only paths, so a run is reproducible from the config file alone.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mvped/common.hpp"
#include "mvped/config.hpp"
#include "mvped/pipeline.hpp"

namespace {

int exit_code(mvped::errc code) {
  switch (code) {
    case mvped::errc::io: return 2;
    case mvped::errc::validation: return 3;
    case mvped::errc::divergence: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised multi-view pedestrian localization"};
  app.require_subcommand(1);
  app.fallthrough();  // --config/--seed may follow the subcommand

  std::string config_path;
  std::uint64_t seed = 1;
  app.add_option("--config", config_path, "JSON run config (defaults apply when omitted)");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "overrides the config seed");

  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("out_dir", synth_out, "output dataset directory")->required();

  std::string dataset_dir;
  CLI::App* segment = app.add_subcommand("segment", "write pseudo-label masks");
  CLI::App* fit = app.add_subcommand("fit", "optimize the scene volume");
  CLI::App* detect = app.add_subcommand("detect", "extract BEV detections");
  CLI::App* eval_cmd = app.add_subcommand("eval", "score detections against ground truth");
  CLI::App* pipeline = app.add_subcommand("pipeline", "segment, fit, detect, eval");
  for (CLI::App* sub : {segment, fit, detect, eval_cmd, pipeline})
    sub->add_option("dataset_dir", dataset_dir, "dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    mvped::RunConfig config;
    if (!config_path.empty()) config = mvped::read_config(config_path);
    if (seed_opt->count() > 0) config.seed = seed;
    config.apply_seed();

    if (synth->parsed()) mvped::cmd_synth(config, synth_out);
    if (segment->parsed()) mvped::cmd_segment(dataset_dir, config);
    if (fit->parsed()) mvped::cmd_fit(dataset_dir, config);
    if (detect->parsed()) mvped::cmd_detect(dataset_dir, config);
    if (eval_cmd->parsed()) mvped::cmd_eval(dataset_dir, config);
    if (pipeline->parsed()) mvped::cmd_pipeline(dataset_dir, config);
  } catch (const mvped::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
