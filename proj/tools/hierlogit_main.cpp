// Command-line front end; all work happens behind the C API.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hierlogit/hierlogit.h"

namespace {

struct GlobalArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int jobs = 0;
};

hierlogit_run_options make_options(const GlobalArgs& args,
                                   bool allow_unconverged = false,
                                   bool skip_screen = false) {
  hierlogit_run_options options{};
  options.has_seed = args.has_seed ? 1 : 0;
  options.seed = args.seed;
  options.output_dir = args.out.empty() ? nullptr : args.out.c_str();
  options.jobs = args.jobs;
  options.allow_unconverged = allow_unconverged ? 1 : 0;
  options.skip_screen = skip_screen ? 1 : 0;
  return options;
}

int finish(int status, char* report) {
  if (report) {
    std::fputs(report, stdout);
    hierlogit_string_free(report);
  }
  if (status != HIERLOGIT_OK) {
    std::fprintf(stderr, "error: %s\n", hierlogit_last_error());
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical Bayesian crash-mode analysis"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs args;
  app.add_option("--config", args.config, "run configuration file");
  app.add_option("--out", args.out, "output directory override");
  auto* seed_opt =
      app.add_option("--seed", args.seed, "master seed override");
  app.add_option("--jobs", args.jobs, "parallel chains");

  auto* ingest = app.add_subcommand(
      "ingest", "load, link, classify, and encode the crash tables");
  auto* screen =
      app.add_subcommand("screen", "variance inflation factor check");
  auto* fit = app.add_subcommand("fit", "sample a model's posterior");
  std::string fit_label;
  bool allow_unconverged = false;
  bool skip_screen = false;
  fit->add_option("--label", fit_label, "model label from the config")
      ->required();
  fit->add_flag("--allow-unconverged", allow_unconverged,
                "exit 0 even when the interval-ratio check fails");
  fit->add_flag("--skip-screen", skip_screen,
                "fit without a prior VIF screen");

  auto* compare =
      app.add_subcommand("compare", "rank stored fits by WAIC and LOO");
  std::vector<std::string> compare_labels;
  compare->add_option("--labels", compare_labels, "fit labels")
      ->required()
      ->delimiter(',');

  auto* synth = app.add_subcommand("synth", "write synthetic datasets");
  std::string scenario_path;
  std::string synth_out = "synth";
  bool fixture = false;
  synth->add_option("--scenario", scenario_path, "scenario config");
  synth->add_flag("--fixture", fixture, "write the bundled fixture tables");
  synth->add_option("--out", synth_out, "output directory");

  auto* report =
      app.add_subcommand("report", "re-render reports from a stored trace");
  std::string report_label;
  report->add_option("--label", report_label, "fit label")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return HIERLOGIT_ERR_USAGE;
  }
  args.has_seed = seed_opt->count() > 0;

  auto need_config = [&]() -> bool {
    if (args.config.empty()) {
      std::fprintf(stderr, "error: --config is required\n");
      return false;
    }
    return true;
  };

  char* text = nullptr;
  if (ingest->parsed()) {
    if (!need_config()) return HIERLOGIT_ERR_USAGE;
    const auto options = make_options(args);
    const int status =
        hierlogit_cmd_ingest(args.config.c_str(), &options, &text);
    return finish(status, text);
  }
  if (screen->parsed()) {
    if (!need_config()) return HIERLOGIT_ERR_USAGE;
    const auto options = make_options(args);
    const int status =
        hierlogit_cmd_screen(args.config.c_str(), &options, &text);
    return finish(status, text);
  }
  if (fit->parsed()) {
    if (!need_config()) return HIERLOGIT_ERR_USAGE;
    const auto options = make_options(args, allow_unconverged, skip_screen);
    const int status = hierlogit_cmd_fit(args.config.c_str(),
                                         fit_label.c_str(), &options, &text);
    return finish(status, text);
  }
  if (compare->parsed()) {
    if (!need_config()) return HIERLOGIT_ERR_USAGE;
    const auto options = make_options(args);
    std::vector<const char*> labels;
    for (const auto& label : compare_labels) labels.push_back(label.c_str());
    const int status = hierlogit_cmd_compare(
        args.config.c_str(), labels.data(), labels.size(), &options, &text);
    return finish(status, text);
  }
  if (synth->parsed()) {
    const auto options = make_options(args);
    const std::string out_dir = args.out.empty() ? synth_out : args.out;
    const int status = hierlogit_cmd_synth(
        out_dir.c_str(),
        scenario_path.empty() ? nullptr : scenario_path.c_str(),
        fixture ? 1 : 0, &options, &text);
    return finish(status, text);
  }
  if (report->parsed()) {
    if (!need_config()) return HIERLOGIT_ERR_USAGE;
    const auto options = make_options(args);
    const int status = hierlogit_cmd_report(
        args.config.c_str(), report_label.c_str(), &options, &text);
    return finish(status, text);
  }
  return HIERLOGIT_ERR_USAGE;
}
