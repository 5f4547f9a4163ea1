#include "core/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <limits>

#include "json.hpp"

#include "core/csv.hpp"
#include "core/errors.hpp"

namespace hierlogit {

using nlohmann::json;

// --------------------------------------------------------------------------
// Scalars
// --------------------------------------------------------------------------

Date Date::parse(const std::string& iso) {
  Date d;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(iso);
  const bool ok =
      static_cast<bool>(in >> d.year >> dash1 >> d.month >> dash2 >> d.day);
  std::string rest;
  in.clear();
  in >> rest;
  if (!ok || !rest.empty() || dash1 != '-' || dash2 != '-' || d.month < 1 ||
      d.month > 12 || d.day < 1 || d.day > 31) {
    throw Error(ErrorCode::MalformedNumeric, "malformed date '" + iso + "'");
  }
  return d;
}

std::string Date::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

const char* mode_name(DrivingMode mode) {
  return mode == DrivingMode::Autonomous ? "autonomous" : "conventional";
}

double parse_numeric(const std::string& text, const std::string& context) {
  size_t begin = text.find_first_not_of(" \t");
  size_t end = text.find_last_not_of(" \t");
  if (begin == std::string::npos) {
    throw Error(ErrorCode::MalformedNumeric, context + ": empty value");
  }
  const char* first = text.data() + begin;
  const char* last = text.data() + end + 1;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::MalformedNumeric,
                context + ": cannot parse '" + text + "'");
  }
  return value;
}

namespace {

std::string format_cutoff(double cutoff) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", cutoff);
  return buf;
}

Initiator initiator_from(const std::string& text) {
  if (text == "av_system") return Initiator::System;
  if (text == "test_driver") return Initiator::TestDriver;
  if (text == "no" || text.empty()) return Initiator::None;
  throw Error(ErrorCode::UnknownLevel, "initiator '" + text + "'");
}

const char* initiator_level(Initiator who) {
  switch (who) {
    case Initiator::System: return "av_system";
    case Initiator::TestDriver: return "test_driver";
    case Initiator::None: return "no";
  }
  return "no";
}

bool flag_from(const std::string& text, const std::string& context) {
  if (text == "presence" || text == "1") return true;
  if (text == "absence" || text == "0" || text.empty()) return false;
  throw Error(ErrorCode::UnknownLevel, context + ": '" + text + "'");
}

std::uint64_t fnv1a(std::uint64_t hash, const void* data, size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::uint64_t fnv1a(std::uint64_t hash, const std::string& text) {
  return fnv1a(hash, text.data(), text.size());
}

}  // namespace

// --------------------------------------------------------------------------
// Catalog
// --------------------------------------------------------------------------

const std::vector<std::string>& VariableCatalog::metadata_columns() {
  static const std::vector<std::string> columns = {
      "crash_id", "date",         "manufacturer",
      "vehicle_type", "vehicle_year", "reported_mode"};
  return columns;
}

const CatalogEntry* VariableCatalog::find(const std::string& name) const {
  for (const auto& entry : entries) {
    if (entry.name == name) return &entry;
  }
  return nullptr;
}

const ResponseEntry* VariableCatalog::find_response(
    const std::string& name) const {
  for (const auto& response : responses) {
    if (response.name == name) return &response;
  }
  return nullptr;
}

void VariableCatalog::validate() const {
  std::set<std::string> seen;
  for (const auto& entry : entries) {
    if (!seen.insert(entry.name).second) {
      throw Error(ErrorCode::InvalidConfig,
                  "duplicate catalog variable '" + entry.name + "'");
    }
    if (entry.kind == VariableKind::Continuous) {
      if (!entry.rule) {
        throw Error(ErrorCode::InvalidConfig,
                    entry.name + ": continuous entry needs a threshold rule");
      }
    } else {
      if (entry.levels.size() < 2) {
        throw Error(ErrorCode::InvalidConfig,
                    entry.name + ": categorical entry needs >= 2 levels");
      }
    }
    if (std::find(entry.levels.begin(), entry.levels.end(),
                  entry.reference_level) == entry.levels.end()) {
      throw Error(ErrorCode::InvalidConfig,
                  entry.name + ": reference level '" + entry.reference_level +
                      "' is not a level");
    }
  }
  for (const auto& response : responses) {
    if (std::find(response.levels.begin(), response.levels.end(),
                  response.positive_level) == response.levels.end()) {
      throw Error(ErrorCode::InvalidConfig,
                  response.name + ": positive level not among levels");
    }
  }
}

VariableCatalog VariableCatalog::load(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) {
    throw Error(ErrorCode::MissingInput,
                "cannot open catalog " + json_path.string());
  }
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig,
                json_path.string() + ": " + e.what());
  }

  VariableCatalog catalog;
  try {
    catalog.crash_type_column = doc.at("crash_type_column").get<std::string>();
    catalog.crash_type_groups =
        doc.at("crash_type_groups").get<std::vector<std::string>>();
    for (const auto& r : doc.at("responses")) {
      ResponseEntry response;
      response.name = r.at("name").get<std::string>();
      response.source_column = r.at("source").get<std::string>();
      response.levels = r.at("levels").get<std::vector<std::string>>();
      response.positive_level = r.at("positive").get<std::string>();
      catalog.responses.push_back(std::move(response));
    }
    for (const auto& v : doc.at("variables")) {
      CatalogEntry entry;
      entry.name = v.at("name").get<std::string>();
      entry.category = v.value("category", "");
      const std::string kind = v.at("kind").get<std::string>();
      if (kind == "continuous") {
        entry.kind = VariableKind::Continuous;
        ContinuousRule rule;
        rule.cutoff = v.at("cutoff").get<double>();
        const std::string side = v.at("nonref_side").get<std::string>();
        if (side == "above") rule.nonref_side = CutSide::Above;
        else if (side == "below") rule.nonref_side = CutSide::Below;
        else
          throw Error(ErrorCode::InvalidConfig,
                      entry.name + ": nonref_side must be above or below");
        rule.integer_count = v.value("integer_count", false);
        rule.min = v.value("min", -std::numeric_limits<double>::infinity());
        rule.max = v.value("max", std::numeric_limits<double>::infinity());
        rule.slack = v.value("slack", 0.0);
        const std::string cut = format_cutoff(rule.cutoff);
        const std::string high = entry.name + ">" + cut;
        const std::string low_eq = entry.name + "<=" + cut;
        const std::string low = entry.name + "<" + cut;
        const std::string high_eq = entry.name + ">=" + cut;
        if (rule.nonref_side == CutSide::Above) {
          entry.levels = {high, low_eq};
          entry.reference_level = low_eq;
        } else {
          entry.levels = {low, high_eq};
          entry.reference_level = high_eq;
        }
        entry.rule = rule;
      } else if (kind == "categorical") {
        entry.kind = VariableKind::Categorical;
        entry.levels = v.at("levels").get<std::vector<std::string>>();
        entry.reference_level = v.at("reference").get<std::string>();
      } else {
        throw Error(ErrorCode::InvalidConfig,
                    entry.name + ": unknown kind '" + kind + "'");
      }
      catalog.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig,
                json_path.string() + ": " + e.what());
  }
  catalog.validate();
  return catalog;
}

// --------------------------------------------------------------------------
// Loading
// --------------------------------------------------------------------------

std::vector<CrashRecord> load_records(const std::filesystem::path& csv_path,
                                      const VariableCatalog& catalog) {
  const CsvTable table = read_csv(csv_path);
  if (table.header.empty() && table.rows.empty()) return {};

  const auto& metadata = VariableCatalog::metadata_columns();
  std::set<std::string> allowed(metadata.begin(), metadata.end());
  for (const auto& entry : catalog.entries) allowed.insert(entry.name);
  for (const auto& response : catalog.responses)
    allowed.insert(response.source_column);

  for (const auto& name : table.header) {
    if (!allowed.count(name)) {
      throw Error(ErrorCode::UnexpectedColumn,
                  "column '" + name + "' not in catalog");
    }
  }
  auto require = [&](const std::string& name) {
    const int idx = table.column(name);
    if (idx < 0) {
      throw Error(ErrorCode::MissingColumn, "column '" + name + "' required");
    }
    return idx;
  };
  for (const auto& name : metadata) require(name);
  // manufacturer and vehicle_year double as catalog variables; every
  // variable and response source needs a column of its own name.
  std::map<std::string, int> columns;
  for (const auto& entry : catalog.entries) {
    columns[entry.name] = require(entry.name);
  }
  for (const auto& response : catalog.responses) {
    columns[response.source_column] = require(response.source_column);
  }

  const int col_id = table.column("crash_id");
  const int col_date = table.column("date");
  const int col_manu = table.column("manufacturer");
  const int col_type = table.column("vehicle_type");
  const int col_year = table.column("vehicle_year");
  const int col_mode = table.column("reported_mode");

  std::vector<CrashRecord> records;
  std::set<std::string> ids;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    CrashRecord record;
    record.crash_id = row[col_id];
    if (!ids.insert(record.crash_id).second) {
      throw Error(ErrorCode::DuplicateCrashId, record.crash_id);
    }
    record.date = Date::parse(row[col_date]);
    record.manufacturer = row[col_manu];
    record.vehicle_type = row[col_type];
    record.vehicle_year = static_cast<int>(
        parse_numeric(row[col_year], record.crash_id + ".vehicle_year"));

    const std::string& mode = row[col_mode];
    if (mode == "engaged") {
      record.mode_hints.engaged_stated = true;
    } else if (mode == "manual") {
      record.mode_hints.manual_stated = true;
    } else if (!mode.empty()) {
      throw Error(ErrorCode::UnknownLevel,
                  record.crash_id + ": reported_mode '" + mode + "'");
    }

    for (const auto& [name, idx] : columns) {
      std::string value = row[idx];
      const CatalogEntry* entry = catalog.find(name);
      if (entry && entry->kind == VariableKind::Continuous) {
        // validate now so malformed cells fail at load with row context
        std::ostringstream ctx;
        ctx << "row " << (r + 1) << " column " << name;
        parse_numeric(value, ctx.str());
      } else if (entry && value.empty()) {
        value = "unknown";
      }
      record.raw_fields[name] = value;
    }
    record.mode_hints.disengagement_mentioned =
        flag_from(record.raw_fields.count("disengagement")
                      ? record.raw_fields.at("disengagement")
                      : "absence",
                  record.crash_id + ".disengagement");
    if (record.raw_fields.count("initiator")) {
      record.initiator = initiator_from(record.raw_fields.at("initiator"));
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<DisengagementRecord> load_disengagements(
    const std::filesystem::path& csv_path) {
  const CsvTable table = read_csv(csv_path);
  std::vector<DisengagementRecord> records;
  if (table.header.empty()) return records;
  auto column = [&](const std::string& name) {
    const int idx = table.column(name);
    if (idx < 0) {
      throw Error(ErrorCode::MissingColumn, "column '" + name + "' required");
    }
    return idx;
  };
  const int col_date = column("date");
  const int col_manu = column("manufacturer");
  const int col_type = column("vehicle_type");
  const int col_init = column("initiator");
  const int col_other = column("unwanted_other_participant");
  const int col_av = column("unwanted_av_movement");
  const int col_lanes = column("changing_lanes");
  const int col_dec = column("deceleration");
  for (const auto& row : table.rows) {
    DisengagementRecord record;
    record.date = Date::parse(row[col_date]);
    record.manufacturer = row[col_manu];
    record.vehicle_type = row[col_type];
    record.initiator = initiator_from(row[col_init]);
    if (record.initiator == Initiator::None) {
      throw Error(ErrorCode::UnknownLevel,
                  "disengagement record needs exactly one initiator");
    }
    record.cause_flags.unwanted_other_participant =
        flag_from(row[col_other], "unwanted_other_participant");
    record.cause_flags.unwanted_av_movement =
        flag_from(row[col_av], "unwanted_av_movement");
    record.cause_flags.changing_lanes =
        flag_from(row[col_lanes], "changing_lanes");
    record.cause_flags.deceleration = flag_from(row[col_dec], "deceleration");
    records.push_back(record);
  }
  return records;
}

// --------------------------------------------------------------------------
// Linkage and classification
// --------------------------------------------------------------------------

namespace {

void write_linkage_fields(CrashRecord& crash) {
  auto set_if_declared = [&](const char* name, const std::string& value) {
    auto it = crash.raw_fields.find(name);
    if (it != crash.raw_fields.end()) it->second = value;
  };
  set_if_declared("disengagement",
                  crash.disengagement_present ? "presence" : "absence");
  set_if_declared("initiator", initiator_level(crash.initiator));
  set_if_declared("unwanted_other_participant",
                  crash.cause_flags.unwanted_other_participant ? "presence"
                                                               : "absence");
  set_if_declared("unwanted_av_movement",
                  crash.cause_flags.unwanted_av_movement ? "presence"
                                                         : "absence");
  set_if_declared("changing_lanes",
                  crash.cause_flags.changing_lanes ? "presence" : "absence");
  set_if_declared("deceleration",
                  crash.cause_flags.deceleration ? "presence" : "absence");
}

CauseFlags cause_flags_from_fields(const CrashRecord& crash) {
  CauseFlags flags;
  auto get = [&](const char* name) {
    auto it = crash.raw_fields.find(name);
    return it != crash.raw_fields.end() && it->second == "presence";
  };
  flags.unwanted_other_participant = get("unwanted_other_participant");
  flags.unwanted_av_movement = get("unwanted_av_movement");
  flags.changing_lanes = get("changing_lanes");
  flags.deceleration = get("deceleration");
  return flags;
}

}  // namespace

LinkStats link_disengagements(std::vector<CrashRecord>& crashes,
                              const std::vector<DisengagementRecord>& diseng) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::vector<const DisengagementRecord*>> index;
  for (const auto& record : diseng) {
    index[{record.date.str(), record.manufacturer, record.vehicle_type}]
        .push_back(&record);
  }

  LinkStats stats;
  for (auto& crash : crashes) {
    const Key key{crash.date.str(), crash.manufacturer, crash.vehicle_type};
    auto it = index.find(key);
    if (it != index.end()) {
      if (it->second.size() > 1) {
        crash.ambiguous_match = true;
        ++stats.ambiguous;
      }
      const DisengagementRecord* match = it->second.front();
      crash.disengagement_present = true;
      crash.initiator = match->initiator;
      crash.cause_flags = match->cause_flags;
      ++stats.matched_by_key;
    } else if (crash.mode_hints.disengagement_mentioned) {
      // Present in the crash narrative only; keep the narrative's own
      // initiator and cause flags.
      crash.disengagement_present = true;
      crash.cause_flags = cause_flags_from_fields(crash);
      ++stats.marked_by_mention;
    } else {
      crash.disengagement_present = false;
      crash.initiator = Initiator::None;
      crash.cause_flags = CauseFlags{};
    }
    write_linkage_fields(crash);
  }
  return stats;
}

DrivingMode classify_mode(const CrashRecord& record) {
  if (record.mode_hints.engaged_stated || record.disengagement_present) {
    return DrivingMode::Autonomous;
  }
  if (record.mode_hints.manual_stated && !record.disengagement_present) {
    return DrivingMode::Conventional;
  }
  throw Error(ErrorCode::UnclassifiableRecord,
              record.crash_id +
                  ": neither engaged/disengagement evidence nor a manual-mode "
                  "statement");
}

ClassifiedRecords classify_all(const std::vector<CrashRecord>& records) {
  ClassifiedRecords out;
  for (const auto& record : records) {
    try {
      if (classify_mode(record) == DrivingMode::Autonomous) {
        out.autonomous.push_back(record);
      } else {
        out.conventional.push_back(record);
      }
    } catch (const Error& e) {
      out.excluded.emplace_back(record.crash_id, e.what());
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Discretization and coding
// --------------------------------------------------------------------------

std::map<std::string, std::string> discretize(
    const CrashRecord& record, const VariableCatalog& catalog,
    std::vector<std::string>* warnings) {
  std::map<std::string, std::string> coded;
  for (const auto& entry : catalog.entries) {
    auto it = record.raw_fields.find(entry.name);
    if (it == record.raw_fields.end()) {
      throw Error(ErrorCode::MissingColumn,
                  record.crash_id + ": no value for '" + entry.name + "'");
    }
    const std::string& raw = it->second;
    if (entry.kind == VariableKind::Continuous) {
      const ContinuousRule& rule = *entry.rule;
      const double value =
          parse_numeric(raw, record.crash_id + "." + entry.name);
      if (rule.integer_count && value < 0) {
        throw Error(ErrorCode::NegativeCount,
                    record.crash_id + "." + entry.name + " = " + raw);
      }
      if (value < rule.min - rule.slack || value > rule.max + rule.slack) {
        if (warnings) {
          std::ostringstream w;
          w << record.crash_id << "." << entry.name << " = " << raw
            << " outside declared range [" << rule.min << ", " << rule.max
            << "]";
          warnings->push_back(w.str());
        }
      }
      const bool nonref = rule.nonref_side == CutSide::Above
                              ? value > rule.cutoff
                              : value < rule.cutoff;
      coded[entry.name] = nonref ? entry.levels[0] : entry.levels[1];
    } else {
      if (std::find(entry.levels.begin(), entry.levels.end(), raw) ==
          entry.levels.end()) {
        throw Error(ErrorCode::UnknownLevel, record.crash_id + "." +
                                                 entry.name + " = '" + raw +
                                                 "'");
      }
      coded[entry.name] = raw;
    }
  }
  return coded;
}

CodedTable build_coded_table(const std::vector<CrashRecord>& records,
                             const VariableCatalog& catalog,
                             const std::string& mode_label,
                             std::vector<std::string>* warnings) {
  CodedTable table;
  table.mode_label = mode_label;
  table.crash_type_order = catalog.crash_type_groups;
  const int n = static_cast<int>(records.size());

  std::vector<std::map<std::string, std::string>> coded_rows;
  coded_rows.reserve(records.size());
  for (const auto& record : records) {
    coded_rows.push_back(discretize(record, catalog, warnings));
    table.crash_ids.push_back(record.crash_id);
    table.unit_keys.push_back(record.manufacturer + "/" +
                              std::to_string(record.vehicle_year));
    auto it = record.raw_fields.find(catalog.crash_type_column);
    if (it == record.raw_fields.end()) {
      throw Error(ErrorCode::MissingColumn,
                  record.crash_id + ": no '" + catalog.crash_type_column +
                      "' value");
    }
    if (std::find(catalog.crash_type_groups.begin(),
                  catalog.crash_type_groups.end(),
                  it->second) == catalog.crash_type_groups.end()) {
      throw Error(ErrorCode::UnknownLevel,
                  record.crash_id + ": crash type '" + it->second + "'");
    }
    table.crash_types.push_back(it->second);
  }

  for (const auto& response : catalog.responses) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      auto it = records[i].raw_fields.find(response.source_column);
      if (it == records[i].raw_fields.end()) {
        throw Error(ErrorCode::MissingColumn,
                    records[i].crash_id + ": no '" + response.source_column +
                        "' value");
      }
      if (std::find(response.levels.begin(), response.levels.end(),
                    it->second) == response.levels.end()) {
        throw Error(ErrorCode::UnknownLevel,
                    records[i].crash_id + "." + response.source_column +
                        " = '" + it->second + "'");
      }
      y(i) = it->second == response.positive_level ? 1.0 : 0.0;
    }
    table.responses[response.name] = std::move(y);
  }

  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> columns;
  for (const auto& entry : catalog.entries) {
    for (const auto& level : entry.levels) {
      if (level == entry.reference_level) continue;
      Eigen::VectorXd column(n);
      for (int i = 0; i < n; ++i) {
        column(i) = coded_rows[i].at(entry.name) == level ? 1.0 : 0.0;
      }
      names.push_back(entry.name + "=" + level);
      columns.push_back(std::move(column));
    }
  }

  // Constant dummies carry no contrast in this subset; prune and record.
  std::vector<int> keep;
  for (size_t k = 0; k < columns.size(); ++k) {
    const bool constant =
        n > 0 && (columns[k].array() == columns[k](0)).all();
    if (constant) {
      table.dropped_constant.push_back(names[k]);
    } else {
      keep.push_back(static_cast<int>(k));
    }
  }
  table.dummies.resize(n, static_cast<int>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    table.dummies.col(static_cast<int>(k)) = columns[keep[k]];
    table.dummy_names.push_back(names[keep[k]]);
  }
  return table;
}

namespace {

std::vector<int> dense_groups(const std::vector<std::string>& keys,
                              std::vector<std::string>& labels_out,
                              const std::vector<std::string>* declared_order) {
  std::vector<std::string> labels;
  if (declared_order) {
    for (const auto& label : *declared_order) {
      if (std::find(keys.begin(), keys.end(), label) != keys.end()) {
        labels.push_back(label);
      }
    }
  } else {
    labels.assign(keys.begin(), keys.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  }
  std::map<std::string, int> ids;
  for (size_t i = 0; i < labels.size(); ++i) {
    ids[labels[i]] = static_cast<int>(i);
  }
  std::vector<int> index;
  index.reserve(keys.size());
  for (const auto& key : keys) index.push_back(ids.at(key));
  labels_out = std::move(labels);
  return index;
}

}  // namespace

CodedDataset select_design(const CodedTable& table,
                           const std::string& response_name,
                           const std::vector<std::string>& terms,
                           Nesting nesting) {
  CodedDataset data;
  auto response_it = table.responses.find(response_name);
  if (response_it == table.responses.end()) {
    throw Error(ErrorCode::InvalidConfig,
                "unknown response '" + response_name + "'");
  }
  data.response = response_it->second;
  data.response_name = response_name;
  data.mode_label = table.mode_label;

  auto dummy_index = [&](const std::string& name) {
    for (size_t i = 0; i < table.dummy_names.size(); ++i) {
      if (table.dummy_names[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  std::vector<int> selected;
  for (const auto& term : terms) {
    if (term.find('=') != std::string::npos) {
      const int idx = dummy_index(term);
      if (idx < 0) {
        if (std::find(table.dropped_constant.begin(),
                      table.dropped_constant.end(),
                      term) != table.dropped_constant.end()) {
          throw Error(ErrorCode::ConstantColumn,
                      "term '" + term + "' is constant in mode " +
                          table.mode_label);
        }
        throw Error(ErrorCode::InvalidConfig, "unknown term '" + term + "'");
      }
      selected.push_back(idx);
      data.column_names.push_back(term);
    } else {
      const std::string prefix = term + "=";
      bool any = false;
      for (size_t i = 0; i < table.dummy_names.size(); ++i) {
        if (table.dummy_names[i].rfind(prefix, 0) == 0) {
          selected.push_back(static_cast<int>(i));
          data.column_names.push_back(table.dummy_names[i]);
          any = true;
        }
      }
      if (!any) {
        bool dropped = false;
        for (const auto& name : table.dropped_constant) {
          if (name.rfind(prefix, 0) == 0) dropped = true;
        }
        if (dropped) {
          throw Error(ErrorCode::ConstantColumn,
                      "all levels of '" + term + "' are constant in mode " +
                          table.mode_label);
        }
        throw Error(ErrorCode::InvalidConfig,
                    "unknown variable '" + term + "'");
      }
    }
  }
  data.fixed_design.resize(table.n(), static_cast<int>(selected.size()));
  for (size_t k = 0; k < selected.size(); ++k) {
    data.fixed_design.col(static_cast<int>(k)) = table.dummies.col(selected[k]);
  }

  switch (nesting) {
    case Nesting::VehicleUnit:
      data.group_index_l2 =
          dense_groups(table.unit_keys, data.group_labels_l2, nullptr);
      break;
    case Nesting::CrashType:
      data.group_index_l2 = dense_groups(table.crash_types,
                                         data.group_labels_l2,
                                         &table.crash_type_order);
      break;
    case Nesting::ThreeLevel:
      data.group_index_l2 =
          dense_groups(table.unit_keys, data.group_labels_l2, nullptr);
      data.group_index_l3 = dense_groups(table.crash_types,
                                         data.group_labels_l3,
                                         &table.crash_type_order);
      break;
  }
  data.level2_design.resize(data.num_groups_l2(), 0);
  data.validate();
  return data;
}

CodedDataset encode_design(const std::vector<CrashRecord>& records,
                           const VariableCatalog& catalog,
                           const std::string& response_name,
                           const std::vector<std::string>& terms,
                           Nesting nesting) {
  if (records.empty()) {
    throw Error(ErrorCode::EmptyGroup, "no records to encode");
  }
  const DrivingMode mode = classify_mode(records.front());
  for (const auto& record : records) {
    if (classify_mode(record) != mode) {
      throw Error(ErrorCode::InvalidConfig,
                  "records mix driving modes; filter by mode first");
    }
  }
  const CodedTable table =
      build_coded_table(records, catalog, mode_name(mode));
  return select_design(table, response_name, terms, nesting);
}

// --------------------------------------------------------------------------
// Dataset invariants and fingerprint
// --------------------------------------------------------------------------

void CodedDataset::validate() const {
  const int rows = n();
  if (rows == 0) throw Error(ErrorCode::EmptyGroup, "empty dataset");
  for (int i = 0; i < rows; ++i) {
    if (response(i) != 0.0 && response(i) != 1.0) {
      throw Error(ErrorCode::NonBinaryResponse,
                  "response[" + std::to_string(i) + "]");
    }
  }
  if (static_cast<int>(column_names.size()) != p()) {
    throw Error(ErrorCode::DimensionMismatch, "column names vs design");
  }
  for (int k = 0; k < p(); ++k) {
    const double first = fixed_design(0, k);
    if ((fixed_design.col(k).array() == first).all()) {
      throw Error(ErrorCode::ConstantColumn, column_names[k]);
    }
  }
  auto check_groups = [&](const std::vector<int>& index, int num_groups,
                          const char* what) {
    if (num_groups < 2) {
      throw Error(ErrorCode::EmptyGroup,
                  std::string(what) + ": needs >= 2 groups");
    }
    std::vector<int> counts(num_groups, 0);
    for (int g : index) {
      if (g < 0 || g >= num_groups) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + ": group id out of range");
      }
      ++counts[g];
    }
    for (int g = 0; g < num_groups; ++g) {
      if (counts[g] == 0) {
        throw Error(ErrorCode::EmptyGroup,
                    std::string(what) + ": group " + std::to_string(g) +
                        " has zero rows");
      }
    }
  };
  if (static_cast<int>(group_index_l2.size()) != rows) {
    throw Error(ErrorCode::DimensionMismatch, "level-2 index length");
  }
  check_groups(group_index_l2, num_groups_l2(), "level 2");
  if (has_level3()) {
    if (static_cast<int>(group_index_l3.size()) != rows) {
      throw Error(ErrorCode::DimensionMismatch, "level-3 index length");
    }
    check_groups(group_index_l3, num_groups_l3(), "level 3");
  }
  if (level2_design.rows() != num_groups_l2()) {
    throw Error(ErrorCode::DimensionMismatch, "level-2 covariate rows");
  }
}

std::uint64_t CodedDataset::fingerprint() const {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  hash = fnv1a(hash, response_name);
  hash = fnv1a(hash, mode_label);
  const int rows = n();
  hash = fnv1a(hash, &rows, sizeof(rows));
  for (int i = 0; i < rows; ++i) {
    const char y = response(i) > 0.5 ? '1' : '0';
    hash = fnv1a(hash, &y, 1);
  }
  return hash;
}

// --------------------------------------------------------------------------
// Serialization
// --------------------------------------------------------------------------

void save_coded_table(const CodedTable& table,
                      const std::filesystem::path& csv_path,
                      const std::filesystem::path& meta_path,
                      const std::vector<std::string>& header_comments) {
  std::vector<std::string> header = {"crash_id", "unit_key", "crash_type"};
  for (const auto& [name, values] : table.responses) header.push_back(name);
  for (const auto& name : table.dummy_names) header.push_back(name);

  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < table.n(); ++i) {
    std::vector<std::string> row = {table.crash_ids[i], table.unit_keys[i],
                                    table.crash_types[i]};
    for (const auto& [name, values] : table.responses) {
      row.push_back(values(i) > 0.5 ? "1" : "0");
    }
    for (int k = 0; k < table.dummies.cols(); ++k) {
      row.push_back(table.dummies(i, k) > 0.5 ? "1" : "0");
    }
    rows.push_back(std::move(row));
  }
  write_csv(csv_path, header, rows, header_comments);

  json meta;
  meta["mode"] = table.mode_label;
  meta["rows"] = table.n();
  meta["crash_type_order"] = table.crash_type_order;
  meta["dummy_columns"] = table.dummy_names;
  meta["dropped_constant"] = table.dropped_constant;
  std::vector<std::string> response_names;
  for (const auto& [name, values] : table.responses)
    response_names.push_back(name);
  meta["responses"] = response_names;
  std::ofstream out(meta_path);
  if (!out) {
    throw Error(ErrorCode::MissingInput, "cannot write " + meta_path.string());
  }
  for (const auto& comment : header_comments) out << "// " << comment << "\n";
  out << meta.dump(2) << "\n";
}

CodedTable load_coded_table(const std::filesystem::path& csv_path,
                            const std::filesystem::path& meta_path) {
  std::ifstream meta_in(meta_path);
  if (!meta_in) {
    throw Error(ErrorCode::MissingInput,
                "cannot open metadata " + meta_path.string());
  }
  json meta;
  try {
    meta = json::parse(meta_in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig,
                meta_path.string() + ": " + e.what());
  }

  CodedTable table;
  table.mode_label = meta.at("mode").get<std::string>();
  table.crash_type_order =
      meta.at("crash_type_order").get<std::vector<std::string>>();
  table.dummy_names = meta.at("dummy_columns").get<std::vector<std::string>>();
  table.dropped_constant =
      meta.at("dropped_constant").get<std::vector<std::string>>();
  const auto response_names =
      meta.at("responses").get<std::vector<std::string>>();

  const CsvTable csv = read_csv(csv_path);
  const int n = static_cast<int>(csv.rows.size());
  const int col_id = csv.column("crash_id");
  const int col_unit = csv.column("unit_key");
  const int col_type = csv.column("crash_type");
  if (col_id < 0 || col_unit < 0 || col_type < 0) {
    throw Error(ErrorCode::MissingColumn, "coded table metadata columns");
  }
  std::map<std::string, int> response_cols;
  for (const auto& name : response_names) {
    const int idx = csv.column(name);
    if (idx < 0) {
      throw Error(ErrorCode::MissingColumn, "response column '" + name + "'");
    }
    response_cols[name] = idx;
    table.responses[name] = Eigen::VectorXd(n);
  }
  table.dummies.resize(n, static_cast<int>(table.dummy_names.size()));
  std::vector<int> dummy_cols;
  for (const auto& name : table.dummy_names) {
    const int idx = csv.column(name);
    if (idx < 0) {
      throw Error(ErrorCode::MissingColumn, "dummy column '" + name + "'");
    }
    dummy_cols.push_back(idx);
  }
  for (int i = 0; i < n; ++i) {
    const auto& row = csv.rows[i];
    table.crash_ids.push_back(row[col_id]);
    table.unit_keys.push_back(row[col_unit]);
    table.crash_types.push_back(row[col_type]);
    for (auto& [name, values] : table.responses) {
      values(i) = parse_numeric(row[response_cols.at(name)], name);
    }
    for (size_t k = 0; k < dummy_cols.size(); ++k) {
      table.dummies(i, static_cast<int>(k)) =
          parse_numeric(row[dummy_cols[k]], table.dummy_names[k]);
    }
  }
  return table;
}

const char* nesting_name(Nesting nesting) {
  switch (nesting) {
    case Nesting::VehicleUnit: return "vehicle_unit";
    case Nesting::CrashType: return "crash_type";
    case Nesting::ThreeLevel: return "three_level";
  }
  return "vehicle_unit";
}

Nesting nesting_from_name(const std::string& name) {
  if (name == "vehicle_unit") return Nesting::VehicleUnit;
  if (name == "crash_type") return Nesting::CrashType;
  if (name == "three_level") return Nesting::ThreeLevel;
  throw Error(ErrorCode::InvalidConfig, "unknown nesting '" + name + "'");
}

}  // namespace hierlogit
