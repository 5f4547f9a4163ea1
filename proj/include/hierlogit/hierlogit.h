#ifndef HIERLOGIT_H
#define HIERLOGIT_H

/* hierlogit: hierarchical Bayesian logistic regression toolkit for
 * crash-mode analysis. C API over the core library: opaque handles,
 * integer status codes, thread-local error messages. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HIERLOGIT_API __declspec(dllexport)
#else
#define HIERLOGIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
enum {
  HIERLOGIT_OK = 0,
  HIERLOGIT_ERR_USAGE = 2,   /* bad arguments, config, missing inputs */
  HIERLOGIT_ERR_DATA = 3,    /* malformed or inconsistent data */
  HIERLOGIT_ERR_NUMERIC = 4  /* non-finite posterior, failed convergence */
};

HIERLOGIT_API const char* hierlogit_version(void);

/* Message describing the most recent failure on this thread. */
HIERLOGIT_API const char* hierlogit_last_error(void);

/* Frees strings returned through char** out-parameters. */
HIERLOGIT_API void hierlogit_string_free(char* text);

/* ------------------------------------------------------------------ */
/* Pipeline commands (run-config driven; see docs for the schema)     */
/* ------------------------------------------------------------------ */

typedef struct hierlogit_run_options {
  int has_seed;            /* nonzero: take `seed` over the config value */
  uint64_t seed;
  const char* output_dir;  /* NULL: keep the config value */
  int jobs;                /* 0: default (sequential chains) */
  int allow_unconverged;   /* fit only */
  int skip_screen;         /* fit only */
} hierlogit_run_options;

HIERLOGIT_API int hierlogit_cmd_ingest(const char* config_path,
                                       const hierlogit_run_options* options,
                                       char** report_out);

HIERLOGIT_API int hierlogit_cmd_screen(const char* config_path,
                                       const hierlogit_run_options* options,
                                       char** report_out);

HIERLOGIT_API int hierlogit_cmd_fit(const char* config_path,
                                    const char* label,
                                    const hierlogit_run_options* options,
                                    char** report_out);

HIERLOGIT_API int hierlogit_cmd_compare(const char* config_path,
                                        const char* const* labels,
                                        size_t n_labels,
                                        const hierlogit_run_options* options,
                                        char** report_out);

/* scenario_path may be NULL when fixture is nonzero. */
HIERLOGIT_API int hierlogit_cmd_synth(const char* out_dir,
                                      const char* scenario_path, int fixture,
                                      const hierlogit_run_options* options,
                                      char** report_out);

HIERLOGIT_API int hierlogit_cmd_report(const char* config_path,
                                       const char* label,
                                       const hierlogit_run_options* options,
                                       char** report_out);

/* ------------------------------------------------------------------ */
/* Library objects                                                    */
/* ------------------------------------------------------------------ */

typedef struct hierlogit_catalog hierlogit_catalog;
typedef struct hierlogit_records hierlogit_records;
typedef struct hierlogit_table hierlogit_table;
typedef struct hierlogit_fit hierlogit_fit;

enum { HIERLOGIT_MODE_AUTONOMOUS = 0, HIERLOGIT_MODE_CONVENTIONAL = 1 };

HIERLOGIT_API int hierlogit_catalog_load(const char* path,
                                         hierlogit_catalog** out);
HIERLOGIT_API void hierlogit_catalog_free(hierlogit_catalog* catalog);

HIERLOGIT_API int hierlogit_records_load(const char* crashes_csv,
                                         const hierlogit_catalog* catalog,
                                         hierlogit_records** out);

/* Marks disengagement presence from the OL311R-style table. */
HIERLOGIT_API int hierlogit_records_link(hierlogit_records* records,
                                         const char* disengagements_csv);

HIERLOGIT_API int hierlogit_records_classify(hierlogit_records* records,
                                             size_t* autonomous_out,
                                             size_t* conventional_out,
                                             size_t* excluded_out);

HIERLOGIT_API void hierlogit_records_free(hierlogit_records* records);

/* Requires a prior classify call; mode picks the per-mode subset. */
HIERLOGIT_API int hierlogit_table_build(const hierlogit_records* records,
                                        const hierlogit_catalog* catalog,
                                        int mode, hierlogit_table** out);

HIERLOGIT_API int hierlogit_table_rows(const hierlogit_table* table,
                                       size_t* rows_out);

/* CSV text with per-column VIF values; pass_out reports the verdict. */
HIERLOGIT_API int hierlogit_table_vif(const hierlogit_table* table,
                                      double threshold, char** csv_out,
                                      int* pass_out);

HIERLOGIT_API void hierlogit_table_free(hierlogit_table* table);

/* model_spec_json uses the run-config "models" entry schema. */
HIERLOGIT_API int hierlogit_fit_run(const hierlogit_table* table,
                                    const char* model_spec_json, int chains,
                                    int burnin, int keep, uint64_t seed,
                                    hierlogit_fit** out);

HIERLOGIT_API int hierlogit_fit_num_parameters(const hierlogit_fit* fit,
                                               size_t* out);

/* The name pointer stays valid until the fit handle is freed. */
HIERLOGIT_API int hierlogit_fit_parameter_name(const hierlogit_fit* fit,
                                               size_t index,
                                               const char** name_out);

/* values: estimate, sd, bci_low, bci_high, odds_ratio, or_low, or_high. */
HIERLOGIT_API int hierlogit_fit_parameter_summary(const hierlogit_fit* fit,
                                                  size_t index,
                                                  double values_out[7],
                                                  int* significant_out);

HIERLOGIT_API int hierlogit_fit_waic(const hierlogit_fit* fit, double* lppd,
                                     double* p_waic, double* waic);

HIERLOGIT_API int hierlogit_fit_loo(const hierlogit_fit* fit, double* elpd,
                                    double* looic, int* n_bad_k);

HIERLOGIT_API int hierlogit_fit_convergence(const hierlogit_fit* fit,
                                            double* max_ratio, int* pass);

HIERLOGIT_API void hierlogit_fit_free(hierlogit_fit* fit);

#ifdef __cplusplus
}
#endif

#endif /* HIERLOGIT_H */
