#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/synthlab.hpp"

namespace hierlogit {

using nlohmann::json;

const char* const kToolkitVersion = "0.1.0";

namespace {

std::uint64_t fnv1a_text(const std::string& text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::vector<std::string> artifact_header(const RunConfig& config) {
  return {std::string("hierlogit ") + kToolkitVersion,
          "config " + config.config_hash,
          "seed " + std::to_string(config.mcmc.seed)};
}

void write_text_file(const std::filesystem::path& path,
                     const std::vector<std::string>& comments,
                     const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::MissingInput, "cannot write " + path.string());
  }
  for (const auto& c : comments) out << "# " << c << "\n";
  out << body;
}

std::string parameter_kind(const std::string& name) {
  if (name.rfind("sd[", 0) == 0) return "random_sd";
  if (name.rfind("u0[", 0) == 0 || name.rfind("u[", 0) == 0 ||
      name.rfind("u3[", 0) == 0) {
    return "random_level";
  }
  return "fixed";
}

}  // namespace

// --------------------------------------------------------------------------
// Run config
// --------------------------------------------------------------------------

const ModelEntry& RunConfig::find_model(const std::string& label) const {
  for (const auto& entry : models) {
    if (entry.spec.label == label) return entry;
  }
  throw Error(ErrorCode::InvalidConfig, "no model labelled '" + label + "'");
}

RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir,
                           const Overrides& overrides) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig,
                std::string("run config: ") + e.what());
  }
  RunConfig config;
  try {
    const auto& inputs = doc.at("inputs");
    config.crashes = resolve(base_dir, inputs.at("crashes").get<std::string>());
    config.disengagements =
        resolve(base_dir, inputs.at("disengagements").get<std::string>());
    config.catalog = resolve(base_dir, inputs.at("catalog").get<std::string>());
    config.mode = doc.value("mode", "both");
    if (config.mode != "both" && config.mode != "autonomous" &&
        config.mode != "conventional") {
      throw Error(ErrorCode::InvalidConfig,
                  "mode must be autonomous, conventional, or both");
    }
    config.screen_exclude =
        doc.value("screen_exclude", std::vector<std::string>{});
    config.vif_threshold = doc.value("vif_threshold", 10.0);
    config.output_dir = resolve(base_dir, doc.value("output", "out"));
    if (doc.contains("emit")) {
      const auto& emit = doc["emit"];
      config.emit_text = emit.value("text", true);
      config.emit_csv = emit.value("csv", true);
      config.emit_plotdata = emit.value("plotdata", true);
    }
    if (doc.contains("mcmc")) {
      const auto& m = doc["mcmc"];
      config.mcmc.n_chains = m.value("chains", 2);
      config.mcmc.n_burnin = m.value("burnin", 5000);
      config.mcmc.n_keep = m.value("keep", 10000);
      config.mcmc.seed = m.value("seed", 0ULL);
      config.mcmc.adapt_window = m.value("adapt_window", 50);
      config.mcmc.target_accept = m.value("target_accept", 0.35);
    }
    for (const auto& m : doc.value("models", json::array())) {
      ModelEntry entry;
      entry.mode = m.value("mode", "autonomous");
      entry.spec = parse_model_spec(m.dump());
      if (entry.spec.label.empty()) {
        throw Error(ErrorCode::InvalidConfig, "every model needs a label");
      }
      config.models.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig,
                std::string("run config: ") + e.what());
  }
  std::set<std::string> labels;
  for (const auto& entry : config.models) {
    if (!labels.insert(entry.spec.label).second) {
      throw Error(ErrorCode::InvalidConfig,
                  "duplicate model label '" + entry.spec.label + "'");
    }
  }
  if (overrides.seed) config.mcmc.seed = *overrides.seed;
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  if (overrides.jobs) config.mcmc.jobs = *overrides.jobs;
  config.mcmc.validate();

  std::string hashed = json_text;
  hashed += "|seed=" + std::to_string(config.mcmc.seed);
  hashed += "|out=" + config.output_dir.string();
  config.config_hash = hash_hex(fnv1a_text(hashed));
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const Overrides& overrides) {
  return parse_run_config(read_file(path), path.parent_path(), overrides);
}

// --------------------------------------------------------------------------
// ingest
// --------------------------------------------------------------------------

namespace {

struct LevelTally {
  std::map<std::string, std::map<std::string, int>> counts;  // var -> level -> n
  int total = 0;
};

LevelTally tally_levels(const std::vector<CrashRecord>& records,
                        const VariableCatalog& catalog) {
  LevelTally tally;
  tally.total = static_cast<int>(records.size());
  for (const auto& record : records) {
    const auto coded = discretize(record, catalog);
    for (const auto& [name, level] : coded) {
      ++tally.counts[name][level];
    }
    for (const auto& response : catalog.responses) {
      ++tally.counts["response:" + response.name]
                    [record.raw_fields.at(response.source_column)];
    }
  }
  return tally;
}

std::string percent(int count, int total) {
  if (total == 0) return "0.00%";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * count / total);
  return buf;
}

}  // namespace

IngestResult cmd_ingest(const RunConfig& config) {
  const VariableCatalog catalog = VariableCatalog::load(config.catalog);
  std::vector<CrashRecord> crashes = load_records(config.crashes, catalog);
  const auto disengagements = load_disengagements(config.disengagements);

  IngestResult result;
  result.total_records = static_cast<int>(crashes.size());
  result.link = link_disengagements(crashes, disengagements);
  const ClassifiedRecords classified = classify_all(crashes);
  result.autonomous_rows = static_cast<int>(classified.autonomous.size());
  result.conventional_rows = static_cast<int>(classified.conventional.size());
  result.excluded = static_cast<int>(classified.excluded.size());

  std::filesystem::create_directories(config.output_dir);
  const auto header = artifact_header(config);

  std::vector<CrashRecord> pooled;
  if (config.mode != "conventional") {
    pooled.insert(pooled.end(), classified.autonomous.begin(),
                  classified.autonomous.end());
  }
  if (config.mode != "autonomous") {
    pooled.insert(pooled.end(), classified.conventional.begin(),
                  classified.conventional.end());
  }
  struct ModeBlock {
    std::string label;
    const std::vector<CrashRecord>* records;
  };
  std::vector<ModeBlock> blocks;
  if (config.mode != "conventional") {
    blocks.push_back({"autonomous", &classified.autonomous});
  }
  if (config.mode != "autonomous") {
    blocks.push_back({"conventional", &classified.conventional});
  }
  blocks.push_back({"pooled", &pooled});

  std::ostringstream report;
  report << "records: " << result.total_records << " total, "
         << result.autonomous_rows << " autonomous, "
         << result.conventional_rows << " conventional, " << result.excluded
         << " excluded\n";
  report << "disengagement linkage: " << result.link.matched_by_key
         << " matched by (date, manufacturer, vehicle type), "
         << result.link.marked_by_mention << " marked from the crash report, "
         << result.link.ambiguous << " ambiguous\n";
  for (const auto& [id, reason] : classified.excluded) {
    report << "excluded " << id << ": " << reason << "\n";
  }

  std::vector<std::vector<std::string>> tally_rows;
  std::map<std::string, LevelTally> tallies;
  for (const auto& block : blocks) {
    tallies[block.label] = tally_levels(*block.records, catalog);
  }

  auto tally_of = [&](const std::string& mode_label, const std::string& var,
                      const std::string& level) {
    auto mode_it = tallies.find(mode_label);
    if (mode_it == tallies.end()) return std::pair<int, int>{0, 0};
    const auto& tally = mode_it->second;
    auto var_it = tally.counts.find(var);
    int count = 0;
    if (var_it != tally.counts.end()) {
      auto level_it = var_it->second.find(level);
      if (level_it != var_it->second.end()) count = level_it->second;
    }
    return std::pair<int, int>{count, tally.total};
  };

  report << "\nvariable distribution (count, share of mode)\n";
  auto emit_variable = [&](const std::string& display,
                           const std::string& key,
                           const std::vector<std::string>& levels,
                           const std::string& reference) {
    report << display << "\n";
    for (const auto& level : levels) {
      const auto [a_count, a_total] = tally_of("autonomous", key, level);
      const auto [c_count, c_total] = tally_of("conventional", key, level);
      const bool is_ref = level == reference;
      std::ostringstream line;
      line << "  " << std::left << std::setw(28)
           << (level + (is_ref ? "*" : ""));
      line << std::right << std::setw(5) << a_count << " " << std::setw(8)
           << percent(a_count, a_total);
      line << std::setw(5) << c_count << " " << std::setw(8)
           << percent(c_count, c_total);
      report << line.str() << "\n";
      tally_rows.push_back({display, level, is_ref ? "1" : "0",
                            std::to_string(a_count),
                            percent(a_count, a_total),
                            std::to_string(c_count),
                            percent(c_count, c_total)});
    }
  };
  for (const auto& response : catalog.responses) {
    emit_variable("response " + response.name, "response:" + response.name,
                  response.levels, "");
  }
  for (const auto& entry : catalog.entries) {
    emit_variable(entry.name, entry.name, entry.levels, entry.reference_level);
  }

  for (const auto& block : blocks) {
    std::vector<std::string> warnings;
    const CodedTable table =
        build_coded_table(*block.records, catalog, block.label, &warnings);
    result.warnings.insert(result.warnings.end(), warnings.begin(),
                           warnings.end());
    const auto csv_path =
        config.output_dir / ("coded_" + block.label + ".csv");
    const auto meta_path =
        config.output_dir / ("coded_" + block.label + ".meta.json");
    save_coded_table(table, csv_path, meta_path, header);
    result.files.push_back(csv_path);
    result.files.push_back(meta_path);
    if (!table.dropped_constant.empty()) {
      report << "\n" << block.label << ": dropped constant columns:";
      for (const auto& name : table.dropped_constant) report << " " << name;
      report << "\n";
    }
  }
  for (const auto& warning : result.warnings) {
    report << "warning: " << warning << "\n";
  }

  result.report_text = report.str();
  if (config.emit_text) {
    const auto path = config.output_dir / "ingest_report.txt";
    write_text_file(path, header, result.report_text);
    result.files.push_back(path);
  }
  if (config.emit_csv) {
    const auto path = config.output_dir / "ingest_report.csv";
    write_csv(path,
              {"variable", "level", "reference", "autonomous_count",
               "autonomous_percent", "conventional_count",
               "conventional_percent"},
              tally_rows, header);
    result.files.push_back(path);
  }
  return result;
}

// --------------------------------------------------------------------------
// screen
// --------------------------------------------------------------------------

namespace {

CodedTable load_mode_table(const RunConfig& config,
                           const std::string& mode_label) {
  const auto csv_path =
      config.output_dir / ("coded_" + mode_label + ".csv");
  const auto meta_path =
      config.output_dir / ("coded_" + mode_label + ".meta.json");
  if (!std::filesystem::exists(csv_path) ||
      !std::filesystem::exists(meta_path)) {
    throw Error(ErrorCode::MissingInput,
                "coded table for mode '" + mode_label +
                    "' not found; run ingest first");
  }
  return load_coded_table(csv_path, meta_path);
}

}  // namespace

ScreenResult cmd_screen(const RunConfig& config) {
  ScreenResult result;
  const CodedTable table = load_mode_table(config, "pooled");

  std::vector<int> selected;
  std::vector<std::string> names;
  for (size_t i = 0; i < table.dummy_names.size(); ++i) {
    const std::string& name = table.dummy_names[i];
    const std::string variable = name.substr(0, name.find('='));
    if (std::find(config.screen_exclude.begin(), config.screen_exclude.end(),
                  variable) != config.screen_exclude.end()) {
      continue;
    }
    selected.push_back(static_cast<int>(i));
    names.push_back(name);
  }
  Eigen::MatrixXd design(table.n(), selected.size());
  for (size_t k = 0; k < selected.size(); ++k) {
    design.col(static_cast<int>(k)) = table.dummies.col(selected[k]);
  }
  result.report = screen(design, names, config.vif_threshold);
  result.all_pass = result.report.pass;

  std::ostringstream report;
  report << "pooled design, " << table.n() << " rows, " << names.size()
         << " columns";
  if (!config.screen_exclude.empty()) {
    report << " (excluded:";
    for (const auto& v : config.screen_exclude) report << " " << v;
    report << ")";
  }
  report << "\n" << result.report.text_table();
  result.report_text = report.str();

  const auto header = artifact_header(config);
  if (config.emit_csv) {
    const auto path = config.output_dir / "screen.csv";
    write_csv(path, {"column", "vif", "flagged"}, result.report.csv_rows(),
              header);
    result.files.push_back(path);
  }
  if (config.emit_text) {
    const auto path = config.output_dir / "screen.txt";
    write_text_file(path, header, result.report_text);
    result.files.push_back(path);
  }
  return result;
}

// --------------------------------------------------------------------------
// fit
// --------------------------------------------------------------------------

namespace {

std::string summary_text(const FitResult& fit) {
  std::ostringstream out;
  out << "model " << fit.label << " (mode " << fit.mode << ")\n";
  size_t width = 9;
  for (const auto& s : fit.summaries) width = std::max(width, s.name.size());
  auto line = [&](const ParameterSummary& s) {
    std::ostringstream row;
    row << "  " << std::left << std::setw(static_cast<int>(width) + 2)
        << s.name << std::right << std::fixed << std::setprecision(2)
        << std::setw(7) << s.estimate << " (" << s.std_error << ")  "
        << std::setw(5) << s.odds_ratio << " (" << s.or_low << "~"
        << s.or_high << ")" << (s.significant ? "  *" : "");
    return row.str();
  };
  out << "fixed effects:  estimate (sd)  OR (95% BCI)\n";
  for (const auto& s : fit.summaries) {
    if (parameter_kind(s.name) == "fixed") out << line(s) << "\n";
  }
  out << "random effects (sd scale):\n";
  bool any_random = false;
  for (const auto& s : fit.summaries) {
    if (parameter_kind(s.name) == "random_sd") {
      out << line(s) << "\n";
      any_random = true;
    }
  }
  if (!any_random) out << "  (none)\n";
  out << std::fixed << std::setprecision(1);
  out << "WAIC " << fit.waic_result.waic << "\n";
  out << "LOO  " << fit.loo_result.looic << "\n";
  out << std::defaultfloat << std::setprecision(6);
  out << "convergence: " << (fit.convergence.overall_pass ? "PASS" : "FAIL")
      << " (max interval ratio " << fit.convergence.max_ratio << ")\n";
  if (fit.stuck) out << "warning: a proposal block accepted < 1% of moves\n";
  if (fit.loo_result.n_bad_k > 0) {
    out << "warning: " << fit.loo_result.n_bad_k
        << " observations with Pareto k > 0.7\n";
  }
  return out.str();
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path,
                     const PosteriorDraws& draws,
                     const std::vector<std::string>& header_comments) {
  std::vector<std::string> header = {"chain", "iteration"};
  header.insert(header.end(), draws.param_names.begin(),
                draws.param_names.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::MissingInput, "cannot write " + path.string());
  }
  for (const auto& c : header_comments) out << "# " << c << "\n";
  out << format_csv_row(header) << "\n";
  for (int c = 0; c < draws.n_chains(); ++c) {
    const auto& chain = draws.chains[c];
    for (int k = 0; k < chain.draws.rows(); ++k) {
      out << c << "," << k;
      for (int p = 0; p < chain.draws.cols(); ++p) {
        out << "," << format_double(chain.draws(k, p));
      }
      out << "\n";
    }
  }
}

PosteriorDraws read_trace_csv(const std::filesystem::path& path) {
  const CsvTable csv = read_csv(path);
  if (csv.header.size() < 3 || csv.header[0] != "chain" ||
      csv.header[1] != "iteration") {
    throw Error(ErrorCode::InvalidConfig,
                path.string() + " is not a trace file");
  }
  PosteriorDraws draws;
  draws.param_names.assign(csv.header.begin() + 2, csv.header.end());
  const int dim = static_cast<int>(draws.param_names.size());

  std::map<int, std::vector<std::vector<double>>> by_chain;
  for (const auto& row : csv.rows) {
    const int chain = static_cast<int>(parse_numeric(row[0], "chain"));
    std::vector<double> values(dim);
    for (int p = 0; p < dim; ++p) {
      values[p] = parse_numeric(row[2 + p], draws.param_names[p]);
    }
    by_chain[chain].push_back(std::move(values));
  }
  for (auto& [chain, rows] : by_chain) {
    ChainResult result;
    result.draws.resize(rows.size(), dim);
    for (size_t k = 0; k < rows.size(); ++k) {
      for (int p = 0; p < dim; ++p) result.draws(k, p) = rows[k][p];
    }
    draws.chains.push_back(std::move(result));
  }
  return draws;
}

namespace {

void write_fit_artifacts(const RunConfig& config, FitResult& fit,
                         bool include_trace) {
  const auto header = artifact_header(config);
  std::filesystem::create_directories(config.output_dir);
  const std::string base = fit.label;

  if (include_trace) {
    const auto path = config.output_dir / (base + "_trace.csv");
    write_trace_csv(path, fit.draws, header);
    fit.files.push_back(path);
  }
  if (config.emit_csv) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : fit.summaries) {
      rows.push_back({s.name, parameter_kind(s.name),
                      format_double(s.estimate), format_double(s.std_error),
                      format_double(s.bci_low), format_double(s.bci_high),
                      format_double(s.odds_ratio), format_double(s.or_low),
                      format_double(s.or_high), s.significant ? "1" : "0"});
    }
    const auto path = config.output_dir / (base + "_summary.csv");
    write_csv(path,
              {"parameter", "kind", "estimate", "sd", "bci_low", "bci_high",
               "odds_ratio", "or_low", "or_high", "significant"},
              rows, header);
    fit.files.push_back(path);

    std::vector<std::vector<std::string>> conv_rows;
    for (const auto& entry : fit.convergence.per_parameter) {
      conv_rows.push_back({entry.name, format_double(entry.interval_ratio),
                           entry.flag ? "1" : "0"});
    }
    const auto conv_path = config.output_dir / (base + "_convergence.csv");
    write_csv(conv_path, {"parameter", "interval_ratio", "flagged"},
              conv_rows, header);
    fit.files.push_back(conv_path);

    const auto ic_path = config.output_dir / (base + "_ic.csv");
    write_csv(ic_path,
              {"label", "mode", "fingerprint", "lppd", "p_waic", "waic",
               "elpd_loo", "looic", "n_bad_k", "converged"},
              {{fit.label, fit.mode, hash_hex(fit.fingerprint),
                format_double(fit.waic_result.lppd),
                format_double(fit.waic_result.p_waic),
                format_double(fit.waic_result.waic),
                format_double(fit.loo_result.elpd_loo),
                format_double(fit.loo_result.looic),
                std::to_string(fit.loo_result.n_bad_k),
                fit.convergence.overall_pass ? "1" : "0"}},
              header);
    fit.files.push_back(ic_path);
  }
  if (config.emit_text) {
    const auto path = config.output_dir / (base + "_summary.txt");
    write_text_file(path, header, fit.report_text);
    fit.files.push_back(path);
    const auto conv_path = config.output_dir / (base + "_convergence.txt");
    write_text_file(conv_path, header, fit.convergence.text_table());
    fit.files.push_back(conv_path);
  }
  if (config.emit_plotdata) {
    // Posterior OR samples per reported parameter, thinned to at most
    // 2000 rows per parameter with a deterministic stride.
    std::vector<std::vector<std::string>> rows;
    const long total = fit.draws.total_draws();
    const long stride = std::max(1L, total / 2000L);
    for (int p = 0; p < fit.draws.dim(); ++p) {
      const std::string& name = fit.draws.param_names[p];
      if (parameter_kind(name) == "random_level") continue;
      const ParameterSummary& s = fit.summaries[p];
      const Eigen::VectorXd pooled = fit.draws.pooled(p);
      for (long k = 0; k < total; k += stride) {
        rows.push_back({name, format_double(s.odds_ratio),
                        format_double(s.or_low), format_double(s.or_high),
                        std::to_string(k),
                        format_double(std::exp(pooled(k)))});
      }
    }
    const auto path = config.output_dir / (base + "_plotdata.csv");
    write_csv(path,
              {"parameter", "odds_ratio", "or_low", "or_high", "draw",
               "or_sample"},
              rows, header);
    fit.files.push_back(path);
  }
}

}  // namespace

FitResult cmd_fit(const RunConfig& config, const std::string& label,
                  bool allow_unconverged, bool skip_screen_check) {
  const ModelEntry& entry = config.find_model(label);
  const CodedTable table = load_mode_table(config, entry.mode);
  if (!skip_screen_check) {
    const auto screen_path = config.output_dir / "screen.csv";
    if (!std::filesystem::exists(screen_path)) {
      throw Error(ErrorCode::MissingInput,
                  "no VIF screen found; run screen or pass --skip-screen");
    }
  }
  const CodedDataset data =
      select_design(table, entry.spec.response_name, entry.spec.fixed_terms,
                    entry.spec.nesting);

  FitResult fit;
  fit.label = label;
  fit.mode = entry.mode;
  fit.fingerprint = data.fingerprint();
  fit.draws = run_mcmc(entry.spec, data, config.mcmc);
  for (const auto& chain : fit.draws.chains) {
    if (chain.stuck) fit.stuck = true;
  }
  fit.convergence = interval_ratio_diagnostic(fit.draws);
  fit.summaries = summarize(fit.draws);
  const Eigen::MatrixXd loglik = fit.draws.stacked_loglik();
  fit.waic_result = waic(loglik);
  fit.loo_result = psis_loo(loglik);
  fit.report_text = summary_text(fit);

  write_fit_artifacts(config, fit, true);
  if (!fit.convergence.overall_pass && !allow_unconverged) {
    throw Error(ErrorCode::ConvergenceFailed,
                "fit '" + label + "' failed the interval-ratio check (max " +
                    format_double(fit.convergence.max_ratio) +
                    "); artifacts were written; rerun longer or pass "
                    "--allow-unconverged");
  }
  return fit;
}

// --------------------------------------------------------------------------
// compare
// --------------------------------------------------------------------------

CompareResult cmd_compare(const RunConfig& config,
                          const std::vector<std::string>& labels) {
  if (labels.size() < 2) {
    throw Error(ErrorCode::InsufficientModels,
                "compare needs >= 2 fit labels");
  }
  std::vector<ModelFitRow> fits;
  for (const auto& label : labels) {
    const auto path = config.output_dir / (label + "_ic.csv");
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::MissingFit,
                  "no fit artifacts for '" + label + "' (" + path.string() +
                      ")");
    }
    const CsvTable csv = read_csv(path);
    if (csv.rows.size() != 1) {
      throw Error(ErrorCode::InvalidConfig, path.string() + ": bad ic file");
    }
    const auto& row = csv.rows[0];
    ModelFitRow fit;
    fit.label = row[csv.column("label")];
    fit.fingerprint = std::stoull(row[csv.column("fingerprint")], nullptr, 16);
    fit.waic.lppd = parse_numeric(row[csv.column("lppd")], "lppd");
    fit.waic.p_waic = parse_numeric(row[csv.column("p_waic")], "p_waic");
    fit.waic.waic = parse_numeric(row[csv.column("waic")], "waic");
    fit.loo.elpd_loo = parse_numeric(row[csv.column("elpd_loo")], "elpd_loo");
    fit.loo.looic = parse_numeric(row[csv.column("looic")], "looic");
    fits.push_back(std::move(fit));
  }
  CompareResult result;
  result.report = compare_models(fits);
  result.report_text = result.report.text_table();

  const auto header = artifact_header(config);
  std::filesystem::create_directories(config.output_dir);
  if (config.emit_text) {
    const auto path = config.output_dir / "compare.txt";
    write_text_file(path, header, result.report_text);
    result.files.push_back(path);
  }
  if (config.emit_csv) {
    const auto path = config.output_dir / "compare.csv";
    write_csv(path, {"label", "waic", "looic", "best_waic", "best_loo"},
              result.report.csv_rows(), header);
    result.files.push_back(path);
  }
  return result;
}

// --------------------------------------------------------------------------
// synth
// --------------------------------------------------------------------------

SynthResult cmd_synth(const std::filesystem::path& out_dir,
                      const std::optional<std::filesystem::path>&
                          scenario_path,
                      bool fixture,
                      std::optional<std::uint64_t> seed_override) {
  SynthResult result;
  std::filesystem::create_directories(out_dir);
  std::ostringstream report;
  if (fixture) {
    const auto crashes = out_dir / "crashes.csv";
    const auto diseng = out_dir / "disengagements.csv";
    const auto catalog = out_dir / "catalog.json";
    write_fixture(crashes, diseng);
    std::ofstream cat(catalog, std::ios::binary);
    cat << fixture_catalog_json();
    result.files = {crashes, diseng, catalog};
    report << "fixture written: 180 crash rows, disengagement table, catalog\n";
  } else {
    if (!scenario_path) {
      throw Error(ErrorCode::InvalidConfig,
                  "synth needs --scenario PATH or --fixture");
    }
    TruthScenario scenario = load_scenario(*scenario_path);
    if (seed_override) scenario.seed = *seed_override;
    const SyntheticData synthetic = generate_synthetic(scenario);
    const CodedDataset& data = synthetic.data;

    std::vector<std::string> header = {"y", "group"};
    header.insert(header.end(), data.column_names.begin(),
                  data.column_names.end());
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < data.n(); ++i) {
      std::vector<std::string> row = {
          data.response(i) > 0.5 ? "1" : "0",
          data.group_labels_l2[data.group_index_l2[i]]};
      for (int p = 0; p < data.p(); ++p) {
        row.push_back(data.fixed_design(i, p) > 0.5 ? "1" : "0");
      }
      rows.push_back(std::move(row));
    }
    const auto csv_path = out_dir / (scenario.label + "_synthetic.csv");
    write_csv(csv_path, header, rows);

    json truth;
    truth["label"] = scenario.label;
    truth["seed"] = scenario.seed;
    truth["gamma00"] = scenario.gamma00;
    truth["gamma"] = scenario.gamma;
    truth["sigma0"] = scenario.sigma0;
    truth["slope_sigmas"] = scenario.slope_sigmas;
    std::vector<double> mu0(synthetic.true_mu0.data(),
                            synthetic.true_mu0.data() +
                                synthetic.true_mu0.size());
    truth["realized_mu0"] = mu0;
    const auto truth_path = out_dir / (scenario.label + "_truth.json");
    std::ofstream truth_out(truth_path, std::ios::binary);
    truth_out << truth.dump(2) << "\n";
    result.files = {csv_path, truth_path};
    report << "scenario '" << scenario.label << "': " << data.n()
           << " rows over " << data.num_groups_l2() << " groups\n";
  }
  result.report_text = report.str();
  return result;
}

// --------------------------------------------------------------------------
// report
// --------------------------------------------------------------------------

ReportResult cmd_report(const RunConfig& config, const std::string& label) {
  const auto trace_path = config.output_dir / (label + "_trace.csv");
  if (!std::filesystem::exists(trace_path)) {
    throw Error(ErrorCode::MissingFit,
                "no trace for '" + label + "' (" + trace_path.string() + ")");
  }
  FitResult fit;
  fit.label = label;
  const ModelEntry& entry = config.find_model(label);
  fit.mode = entry.mode;
  fit.draws = read_trace_csv(trace_path);
  fit.convergence = interval_ratio_diagnostic(fit.draws);
  fit.summaries = summarize(fit.draws);
  // information criteria come from the stored ic file, not recomputed
  const auto ic_path = config.output_dir / (label + "_ic.csv");
  if (std::filesystem::exists(ic_path)) {
    const CsvTable csv = read_csv(ic_path);
    const auto& row = csv.rows.at(0);
    fit.waic_result.lppd = parse_numeric(row[csv.column("lppd")], "lppd");
    fit.waic_result.p_waic =
        parse_numeric(row[csv.column("p_waic")], "p_waic");
    fit.waic_result.waic = parse_numeric(row[csv.column("waic")], "waic");
    fit.loo_result.elpd_loo =
        parse_numeric(row[csv.column("elpd_loo")], "elpd_loo");
    fit.loo_result.looic = parse_numeric(row[csv.column("looic")], "looic");
    fit.loo_result.n_bad_k = static_cast<int>(
        parse_numeric(row[csv.column("n_bad_k")], "n_bad_k"));
  }
  fit.report_text = summary_text(fit);
  write_fit_artifacts(config, fit, false);

  ReportResult result;
  result.report_text = fit.report_text;
  result.files = fit.files;
  return result;
}

}  // namespace hierlogit
