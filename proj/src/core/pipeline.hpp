#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/evaluation.hpp"
#include "core/model.hpp"
#include "core/sampler.hpp"
#include "core/screening.hpp"

namespace hierlogit {

extern const char* const kToolkitVersion;

struct ModelEntry {
  std::string mode;  // autonomous | conventional | synthetic table label
  HierarchicalModelSpec spec;
};

struct RunConfig {
  std::filesystem::path crashes;
  std::filesystem::path disengagements;
  std::filesystem::path catalog;
  std::string mode = "both";  // which modes ingest emits
  std::vector<ModelEntry> models;
  // Variables left out of the VIF screen (e.g. ones nested inside another
  // variable by construction); everything else is screened.
  std::vector<std::string> screen_exclude;
  double vif_threshold = 10.0;
  McmcConfig mcmc;
  std::filesystem::path output_dir;
  bool emit_text = true;
  bool emit_csv = true;
  bool emit_plotdata = true;
  std::string config_hash;  // over config text + applied overrides

  const ModelEntry& find_model(const std::string& label) const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<int> jobs;
};

RunConfig load_run_config(const std::filesystem::path& path,
                          const Overrides& overrides = {});
RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir,
                           const Overrides& overrides = {});

// --------------------------------------------------------------------------
// Commands
// --------------------------------------------------------------------------

struct IngestResult {
  int total_records = 0;
  int autonomous_rows = 0;
  int conventional_rows = 0;
  int excluded = 0;
  LinkStats link;
  std::vector<std::string> warnings;
  std::string report_text;
  std::vector<std::filesystem::path> files;
};

IngestResult cmd_ingest(const RunConfig& config);

struct ScreenResult {
  VifReport report;  // over the pooled coded table
  bool all_pass = true;
  std::string report_text;
  std::vector<std::filesystem::path> files;
};

// Screens the pooled (both-mode) design the way the pre-model check is
// meant to run: one verdict for the whole dataset.
ScreenResult cmd_screen(const RunConfig& config);

struct FitResult {
  std::string label;
  std::string mode;
  std::uint64_t fingerprint = 0;
  PosteriorDraws draws;
  std::vector<ParameterSummary> summaries;
  ConvergenceReport convergence;
  WaicResult waic_result;
  LooResult loo_result;
  bool stuck = false;
  std::string report_text;
  std::vector<std::filesystem::path> files;
};

FitResult cmd_fit(const RunConfig& config, const std::string& label,
                  bool allow_unconverged = false,
                  bool skip_screen_check = false);

struct CompareResult {
  ComparisonReport report;
  std::string report_text;
  std::vector<std::filesystem::path> files;
};

CompareResult cmd_compare(const RunConfig& config,
                          const std::vector<std::string>& labels);

struct SynthResult {
  std::string report_text;
  std::vector<std::filesystem::path> files;
};

// Writes either a scenario dataset (scenario_path given) or the bundled
// fixture tables (fixture = true).
SynthResult cmd_synth(const std::filesystem::path& out_dir,
                      const std::optional<std::filesystem::path>&
                          scenario_path,
                      bool fixture,
                      std::optional<std::uint64_t> seed_override);

struct ReportResult {
  std::string report_text;
  std::vector<std::filesystem::path> files;
};

// Re-derives summary, convergence, and plot data from a stored trace.
ReportResult cmd_report(const RunConfig& config, const std::string& label);

// Trace round-trip used by cmd_report and the determinism checks.
void write_trace_csv(const std::filesystem::path& path,
                     const PosteriorDraws& draws,
                     const std::vector<std::string>& header_comments);
PosteriorDraws read_trace_csv(const std::filesystem::path& path);

}  // namespace hierlogit
