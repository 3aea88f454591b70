#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "orpr/eval/experiment.hpp"

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("ORPR_OUT")) return env;
  return "./out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic replenishment laboratory: OR-guided labels, policy "
               "pretraining, RLOO fine-tuning, and method comparison reports"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = default_out_dir();
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "Experiment config file (JSON)");
  app.add_option("--out", out_dir, "Output directory (default $ORPR_OUT or ./out)");
  app.add_option("--seed", seed, "Seed override")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* gen = app.add_subcommand("gen", "Generate (or import) the demand panel");
  auto* params = app.add_subcommand("params", "Tabulate stock/loss parameters");
  auto* labels = app.add_subcommand("labels", "Calibrate alpha and emit labels");
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the policy network");
  auto* finetune = app.add_subcommand("finetune", "RLOO fine-tuning");
  auto* eval = app.add_subcommand("eval", "Evaluate all methods on the test split");
  auto* report = app.add_subcommand("report", "Render report.csv from eval output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fprintf(stderr, "%s", app.help().c_str());
    return 2;
  }

  try {
    orpr::eval::ExperimentConfig config = config_path.empty()
                                              ? orpr::eval::default_config()
                                              : orpr::eval::load_config(config_path);
    if (seed_set) config.seed = seed;

    if (gen->parsed()) orpr::eval::stage_gen(config, out_dir);
    if (params->parsed()) orpr::eval::stage_params(config, out_dir);
    if (labels->parsed()) orpr::eval::stage_labels(config, out_dir);
    if (pretrain->parsed()) orpr::eval::stage_pretrain(config, out_dir);
    if (finetune->parsed()) orpr::eval::stage_finetune(config, out_dir);
    if (eval->parsed()) orpr::eval::stage_eval(config, out_dir);
    if (report->parsed()) orpr::eval::stage_report(config, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
