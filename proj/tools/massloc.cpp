#include "massloc/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace massloc;

  CLI::App app{"Mass localisation by greedy backtracking through a bias-free stacked auto-encoder"};
  app.require_subcommand(1);
  int jobs = 0;

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write the synthetic dataset and its manifest");
  generate->add_option("-c,--config", gen.config, "JSON run configuration")->check(CLI::ExistingFile);
  generate->add_option("-o,--out", gen.out_dir, "Output directory")->required();
  generate->add_option("-j,--jobs", jobs, "Worker threads (0: one per core)");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Layer-wise training on a manifest's train split");
  train_cmd->add_option("-c,--config", train.config, "JSON run configuration")->check(CLI::ExistingFile);
  train_cmd->add_option("-m,--manifest", train.manifest, "Dataset manifest")->required();
  train_cmd->add_option("-o,--model", train.model_out, "Model file to write (report goes to <model>.json)")
      ->required();
  train_cmd->add_option("-j,--jobs", jobs, "Threads for image loading (0: one per core)");

  LocaliseOptions loc;
  auto* localise = app.add_subcommand("localise", "Classify one image and locate the mass");
  localise->add_option("-c,--config", loc.config, "JSON run configuration")->check(CLI::ExistingFile);
  localise->add_option("-m,--model", loc.model, "Model file")->required();
  localise->add_option("image", loc.image, "Input PGM")->required();
  localise->add_option("--method", loc.method, "backtrack or occlusion")
      ->check(CLI::IsMember({"backtrack", "occlusion"}));
  localise->add_option("--force-class", loc.force_class, "Localise for this class instead of the prediction");
  localise->add_option("--emit-overlays", loc.overlay_dir, "Write overlay PGMs into this directory");
  localise->add_flag("--resize", loc.resize, "Resize the image to the network's input size");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Localisation and classification report on the test split");
  evaluate->add_option("-c,--config", ev.config, "JSON run configuration")->check(CLI::ExistingFile);
  evaluate->add_option("-m,--model", ev.model, "Model file")->required();
  evaluate->add_option("--manifest", ev.manifest, "Dataset manifest")->required();
  evaluate->add_option("--methods", ev.methods, "Methods to compare")
      ->delimiter(',')
      ->check(CLI::IsMember({"backtrack", "occlusion"}));
  evaluate->add_option("-o,--out", ev.out_dir, "Directory for report files")->required();
  evaluate->add_option("-j,--jobs", jobs, "Worker threads (0: one per core)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (jobs < 0) {
    std::cerr << "config error: --jobs must be >= 0\n";
    return kExitConfig;
  }
  if (*generate) {
    gen.jobs = jobs;
    return cmd_generate(gen, std::cout, std::cerr);
  }
  if (*train_cmd) {
    train.jobs = jobs;
    return cmd_train(train, std::cout, std::cerr);
  }
  if (*localise) return cmd_localise(loc, std::cout, std::cerr);
  ev.jobs = jobs;
  return cmd_evaluate(ev, std::cout, std::cerr);
}
