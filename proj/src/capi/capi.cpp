#include "hierlogit/hierlogit.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/csv.hpp"
#include "core/dataset.hpp"
#include "core/errors.hpp"
#include "core/evaluation.hpp"
#include "core/model.hpp"
#include "core/pipeline.hpp"
#include "core/sampler.hpp"
#include "core/screening.hpp"

using namespace hierlogit;

namespace {

thread_local std::string g_last_error;

int set_error(const std::exception& e) {
  g_last_error = e.what();
  if (const auto* error = dynamic_cast<const Error*>(&e)) {
    return static_cast<int>(error->category());
  }
  return HIERLOGIT_ERR_DATA;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return HIERLOGIT_OK;
  } catch (const std::exception& e) {
    return set_error(e);
  } catch (...) {
    g_last_error = "unknown failure";
    return HIERLOGIT_ERR_DATA;
  }
}

char* copy_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

Overrides to_overrides(const hierlogit_run_options* options) {
  Overrides overrides;
  if (!options) return overrides;
  if (options->has_seed) overrides.seed = options->seed;
  if (options->output_dir) {
    overrides.output_dir = std::filesystem::path(options->output_dir);
  }
  if (options->jobs > 0) overrides.jobs = options->jobs;
  return overrides;
}

int require(const void* p, const char* what) {
  if (p) return HIERLOGIT_OK;
  g_last_error = std::string(what) + " must not be null";
  return HIERLOGIT_ERR_USAGE;
}

}  // namespace

struct hierlogit_catalog {
  VariableCatalog catalog;
};

struct hierlogit_records {
  std::vector<CrashRecord> records;
  ClassifiedRecords classified;
  bool classified_done = false;
};

struct hierlogit_table {
  CodedTable table;
};

struct hierlogit_fit {
  PosteriorDraws draws;
  std::vector<ParameterSummary> summaries;
  ConvergenceReport convergence;
  WaicResult waic_result;
  LooResult loo_result;
};

extern "C" {

const char* hierlogit_version(void) { return kToolkitVersion; }

const char* hierlogit_last_error(void) { return g_last_error.c_str(); }

void hierlogit_string_free(char* text) { std::free(text); }

/* ------------------------------------------------------------------ */
/* Pipeline commands                                                  */
/* ------------------------------------------------------------------ */

int hierlogit_cmd_ingest(const char* config_path,
                         const hierlogit_run_options* options,
                         char** report_out) {
  if (int rc = require(config_path, "config_path")) return rc;
  return guarded([&] {
    const RunConfig config =
        load_run_config(config_path, to_overrides(options));
    const IngestResult result = cmd_ingest(config);
    if (report_out) *report_out = copy_string(result.report_text);
  });
}

int hierlogit_cmd_screen(const char* config_path,
                         const hierlogit_run_options* options,
                         char** report_out) {
  if (int rc = require(config_path, "config_path")) return rc;
  return guarded([&] {
    const RunConfig config =
        load_run_config(config_path, to_overrides(options));
    const ScreenResult result = cmd_screen(config);
    if (report_out) *report_out = copy_string(result.report_text);
  });
}

int hierlogit_cmd_fit(const char* config_path, const char* label,
                      const hierlogit_run_options* options,
                      char** report_out) {
  if (int rc = require(config_path, "config_path")) return rc;
  if (int rc = require(label, "label")) return rc;
  return guarded([&] {
    const RunConfig config =
        load_run_config(config_path, to_overrides(options));
    const bool allow = options && options->allow_unconverged;
    const bool skip = options && options->skip_screen;
    try {
      const FitResult result = cmd_fit(config, label, allow, skip);
      if (report_out) *report_out = copy_string(result.report_text);
    } catch (const Error& e) {
      // artifacts are written before a convergence failure surfaces
      if (report_out && e.code() == ErrorCode::ConvergenceFailed) {
        *report_out = copy_string(std::string(e.what()) + "\n");
      }
      throw;
    }
  });
}

int hierlogit_cmd_compare(const char* config_path, const char* const* labels,
                          size_t n_labels,
                          const hierlogit_run_options* options,
                          char** report_out) {
  if (int rc = require(config_path, "config_path")) return rc;
  if (int rc = require(labels, "labels")) return rc;
  return guarded([&] {
    const RunConfig config =
        load_run_config(config_path, to_overrides(options));
    std::vector<std::string> label_list(labels, labels + n_labels);
    const CompareResult result = cmd_compare(config, label_list);
    if (report_out) *report_out = copy_string(result.report_text);
  });
}

int hierlogit_cmd_synth(const char* out_dir, const char* scenario_path,
                        int fixture, const hierlogit_run_options* options,
                        char** report_out) {
  if (int rc = require(out_dir, "out_dir")) return rc;
  return guarded([&] {
    std::optional<std::filesystem::path> scenario;
    if (scenario_path) scenario = std::filesystem::path(scenario_path);
    std::optional<std::uint64_t> seed;
    if (options && options->has_seed) seed = options->seed;
    const SynthResult result =
        cmd_synth(out_dir, scenario, fixture != 0, seed);
    if (report_out) *report_out = copy_string(result.report_text);
  });
}

int hierlogit_cmd_report(const char* config_path, const char* label,
                         const hierlogit_run_options* options,
                         char** report_out) {
  if (int rc = require(config_path, "config_path")) return rc;
  if (int rc = require(label, "label")) return rc;
  return guarded([&] {
    const RunConfig config =
        load_run_config(config_path, to_overrides(options));
    const ReportResult result = cmd_report(config, label);
    if (report_out) *report_out = copy_string(result.report_text);
  });
}

/* ------------------------------------------------------------------ */
/* Library objects                                                    */
/* ------------------------------------------------------------------ */

int hierlogit_catalog_load(const char* path, hierlogit_catalog** out) {
  if (int rc = require(path, "path")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    auto handle = std::make_unique<hierlogit_catalog>();
    handle->catalog = VariableCatalog::load(path);
    *out = handle.release();
  });
}

void hierlogit_catalog_free(hierlogit_catalog* catalog) { delete catalog; }

int hierlogit_records_load(const char* crashes_csv,
                           const hierlogit_catalog* catalog,
                           hierlogit_records** out) {
  if (int rc = require(crashes_csv, "crashes_csv")) return rc;
  if (int rc = require(catalog, "catalog")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    auto handle = std::make_unique<hierlogit_records>();
    handle->records = load_records(crashes_csv, catalog->catalog);
    *out = handle.release();
  });
}

int hierlogit_records_link(hierlogit_records* records,
                           const char* disengagements_csv) {
  if (int rc = require(records, "records")) return rc;
  if (int rc = require(disengagements_csv, "disengagements_csv")) return rc;
  return guarded([&] {
    const auto disengagements = load_disengagements(disengagements_csv);
    link_disengagements(records->records, disengagements);
    records->classified_done = false;
  });
}

int hierlogit_records_classify(hierlogit_records* records,
                               size_t* autonomous_out,
                               size_t* conventional_out,
                               size_t* excluded_out) {
  if (int rc = require(records, "records")) return rc;
  return guarded([&] {
    records->classified = classify_all(records->records);
    records->classified_done = true;
    if (autonomous_out) *autonomous_out = records->classified.autonomous.size();
    if (conventional_out) {
      *conventional_out = records->classified.conventional.size();
    }
    if (excluded_out) *excluded_out = records->classified.excluded.size();
  });
}

void hierlogit_records_free(hierlogit_records* records) { delete records; }

int hierlogit_table_build(const hierlogit_records* records,
                          const hierlogit_catalog* catalog, int mode,
                          hierlogit_table** out) {
  if (int rc = require(records, "records")) return rc;
  if (int rc = require(catalog, "catalog")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    if (!records->classified_done) {
      throw Error(ErrorCode::InvalidConfig,
                  "classify records before building a table");
    }
    const auto& subset = mode == HIERLOGIT_MODE_AUTONOMOUS
                             ? records->classified.autonomous
                             : records->classified.conventional;
    const char* label =
        mode == HIERLOGIT_MODE_AUTONOMOUS ? "autonomous" : "conventional";
    auto handle = std::make_unique<hierlogit_table>();
    handle->table = build_coded_table(subset, catalog->catalog, label);
    *out = handle.release();
  });
}

int hierlogit_table_rows(const hierlogit_table* table, size_t* rows_out) {
  if (int rc = require(table, "table")) return rc;
  if (int rc = require(rows_out, "rows_out")) return rc;
  *rows_out = static_cast<size_t>(table->table.n());
  return HIERLOGIT_OK;
}

int hierlogit_table_vif(const hierlogit_table* table, double threshold,
                        char** csv_out, int* pass_out) {
  if (int rc = require(table, "table")) return rc;
  return guarded([&] {
    const VifReport report =
        screen(table->table.dummies, table->table.dummy_names, threshold);
    if (pass_out) *pass_out = report.pass ? 1 : 0;
    if (csv_out) {
      std::string csv = "column,vif,flagged\n";
      for (const auto& row : report.csv_rows()) {
        csv += format_csv_row(row) + "\n";
      }
      *csv_out = copy_string(csv);
    }
  });
}

void hierlogit_table_free(hierlogit_table* table) { delete table; }

int hierlogit_fit_run(const hierlogit_table* table,
                      const char* model_spec_json, int chains, int burnin,
                      int keep, uint64_t seed, hierlogit_fit** out) {
  if (int rc = require(table, "table")) return rc;
  if (int rc = require(model_spec_json, "model_spec_json")) return rc;
  if (int rc = require(out, "out")) return rc;
  return guarded([&] {
    const HierarchicalModelSpec spec = parse_model_spec(model_spec_json);
    const CodedDataset data = select_design(
        table->table, spec.response_name, spec.fixed_terms, spec.nesting);
    McmcConfig config;
    config.n_chains = chains;
    config.n_burnin = burnin;
    config.n_keep = keep;
    config.seed = seed;
    auto handle = std::make_unique<hierlogit_fit>();
    handle->draws = run_mcmc(spec, data, config);
    handle->summaries = summarize(handle->draws);
    handle->convergence = interval_ratio_diagnostic(handle->draws);
    const Eigen::MatrixXd loglik = handle->draws.stacked_loglik();
    handle->waic_result = waic(loglik);
    handle->loo_result = psis_loo(loglik);
    *out = handle.release();
  });
}

int hierlogit_fit_num_parameters(const hierlogit_fit* fit, size_t* out) {
  if (int rc = require(fit, "fit")) return rc;
  if (int rc = require(out, "out")) return rc;
  *out = fit->summaries.size();
  return HIERLOGIT_OK;
}

int hierlogit_fit_parameter_name(const hierlogit_fit* fit, size_t index,
                                 const char** name_out) {
  if (int rc = require(fit, "fit")) return rc;
  if (int rc = require(name_out, "name_out")) return rc;
  if (index >= fit->summaries.size()) {
    g_last_error = "parameter index out of range";
    return HIERLOGIT_ERR_USAGE;
  }
  *name_out = fit->summaries[index].name.c_str();
  return HIERLOGIT_OK;
}

int hierlogit_fit_parameter_summary(const hierlogit_fit* fit, size_t index,
                                    double values_out[7],
                                    int* significant_out) {
  if (int rc = require(fit, "fit")) return rc;
  if (int rc = require(values_out, "values_out")) return rc;
  if (index >= fit->summaries.size()) {
    g_last_error = "parameter index out of range";
    return HIERLOGIT_ERR_USAGE;
  }
  const ParameterSummary& s = fit->summaries[index];
  values_out[0] = s.estimate;
  values_out[1] = s.std_error;
  values_out[2] = s.bci_low;
  values_out[3] = s.bci_high;
  values_out[4] = s.odds_ratio;
  values_out[5] = s.or_low;
  values_out[6] = s.or_high;
  if (significant_out) *significant_out = s.significant ? 1 : 0;
  return HIERLOGIT_OK;
}

int hierlogit_fit_waic(const hierlogit_fit* fit, double* lppd, double* p_waic,
                       double* waic_out) {
  if (int rc = require(fit, "fit")) return rc;
  if (lppd) *lppd = fit->waic_result.lppd;
  if (p_waic) *p_waic = fit->waic_result.p_waic;
  if (waic_out) *waic_out = fit->waic_result.waic;
  return HIERLOGIT_OK;
}

int hierlogit_fit_loo(const hierlogit_fit* fit, double* elpd, double* looic,
                      int* n_bad_k) {
  if (int rc = require(fit, "fit")) return rc;
  if (elpd) *elpd = fit->loo_result.elpd_loo;
  if (looic) *looic = fit->loo_result.looic;
  if (n_bad_k) *n_bad_k = fit->loo_result.n_bad_k;
  return HIERLOGIT_OK;
}

int hierlogit_fit_convergence(const hierlogit_fit* fit, double* max_ratio,
                              int* pass) {
  if (int rc = require(fit, "fit")) return rc;
  if (max_ratio) *max_ratio = fit->convergence.max_ratio;
  if (pass) *pass = fit->convergence.overall_pass ? 1 : 0;
  return HIERLOGIT_OK;
}

void hierlogit_fit_free(hierlogit_fit* fit) { delete fit; }

}  // extern "C"
