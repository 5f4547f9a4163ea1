#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hierlogit {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  static Date parse(const std::string& iso);  // "YYYY-MM-DD"
  std::string str() const;
  auto operator<=>(const Date&) const = default;
};

enum class DrivingMode { Autonomous, Conventional };

const char* mode_name(DrivingMode mode);

enum class Initiator { None, System, TestDriver };

struct ModeHints {
  bool manual_stated = false;
  bool disengagement_mentioned = false;
  // The report states the system stayed engaged through the crash.
  bool engaged_stated = false;
};

struct CauseFlags {
  bool unwanted_other_participant = false;
  bool unwanted_av_movement = false;
  bool changing_lanes = false;
  bool deceleration = false;
};

struct CrashRecord {
  std::string crash_id;
  Date date;
  std::string manufacturer;
  std::string vehicle_type;
  int vehicle_year = 0;
  ModeHints mode_hints;
  std::map<std::string, std::string> raw_fields;

  // Filled by link_disengagements.
  bool disengagement_present = false;
  Initiator initiator = Initiator::None;
  CauseFlags cause_flags;
  bool ambiguous_match = false;
};

struct DisengagementRecord {
  Date date;
  std::string manufacturer;
  std::string vehicle_type;
  Initiator initiator = Initiator::TestDriver;
  CauseFlags cause_flags;
};

enum class VariableKind { Continuous, Categorical };

// For continuous variables the non-reference level sits strictly on one
// side of the cutoff; the boundary always lands in the reference level.
enum class CutSide { Above, Below };

struct ContinuousRule {
  double cutoff = 0.0;
  CutSide nonref_side = CutSide::Above;
  bool integer_count = false;  // negative values are rejected
  double min = 0.0;            // declared range; excursions warn, not fail
  double max = 0.0;
  double slack = 0.0;
};

struct CatalogEntry {
  std::string name;
  VariableKind kind = VariableKind::Categorical;
  std::vector<std::string> levels;  // categorical order; continuous {nonref, ref}
  std::string reference_level;
  std::optional<ContinuousRule> rule;
  std::string category;  // environment / road / vehicle
};

struct ResponseEntry {
  std::string name;            // e.g. "injury", "rear_end"
  std::string source_column;   // raw column carrying the levels
  std::vector<std::string> levels;
  std::string positive_level;  // coded 1; everything else is 0
};

struct VariableCatalog {
  std::vector<CatalogEntry> entries;
  std::vector<ResponseEntry> responses;
  std::string crash_type_column;                // raw 6-class column
  std::vector<std::string> crash_type_groups;   // declared class order

  const CatalogEntry* find(const std::string& name) const;
  const ResponseEntry* find_response(const std::string& name) const;
  void validate() const;

  static VariableCatalog load(const std::filesystem::path& json_path);
  static const std::vector<std::string>& metadata_columns();
};

// --------------------------------------------------------------------------
// Coded data
// --------------------------------------------------------------------------

enum class Nesting { VehicleUnit, CrashType, ThreeLevel };

const char* nesting_name(Nesting nesting);
Nesting nesting_from_name(const std::string& name);

struct CodedDataset {
  Eigen::VectorXd response;         // n, entries in {0,1}
  Eigen::MatrixXd fixed_design;     // n x P dummies
  Eigen::MatrixXd level2_design;    // J x Q group-level covariates (Q may be 0)
  std::vector<int> group_index_l2;  // n, dense in [0,J)
  std::vector<int> group_index_l3;  // empty, or n entries dense in [0,J3)
  std::vector<std::string> column_names;     // P entries, "variable=level"
  std::vector<std::string> level2_names;     // Q entries
  std::vector<std::string> group_labels_l2;  // J entries
  std::vector<std::string> group_labels_l3;  // J3 entries
  std::string response_name;
  std::string mode_label;

  int n() const { return static_cast<int>(response.size()); }
  int p() const { return static_cast<int>(fixed_design.cols()); }
  int q() const { return static_cast<int>(level2_design.cols()); }
  int num_groups_l2() const { return static_cast<int>(group_labels_l2.size()); }
  int num_groups_l3() const { return static_cast<int>(group_labels_l3.size()); }
  bool has_level3() const { return !group_index_l3.empty(); }

  std::uint64_t fingerprint() const;  // comparability key across fits
  void validate() const;
};

// Full per-mode coded table: every catalog variable expanded to dummies,
// all responses kept. This is the ingest artifact which model fits then
// select columns from.
struct CodedTable {
  std::string mode_label;
  std::vector<std::string> crash_ids;
  std::vector<std::string> unit_keys;    // "manufacturer/vehicle_year"
  std::vector<std::string> crash_types;  // raw class labels
  std::vector<std::string> crash_type_order;
  std::map<std::string, Eigen::VectorXd> responses;
  Eigen::MatrixXd dummies;
  std::vector<std::string> dummy_names;
  std::vector<std::string> dropped_constant;  // dummies pruned as constant

  int n() const { return static_cast<int>(crash_ids.size()); }
};

// --------------------------------------------------------------------------
// Operations
// --------------------------------------------------------------------------

std::vector<CrashRecord> load_records(const std::filesystem::path& csv_path,
                                      const VariableCatalog& catalog);

std::vector<DisengagementRecord> load_disengagements(
    const std::filesystem::path& csv_path);

struct LinkStats {
  int matched_by_key = 0;
  int marked_by_mention = 0;
  int ambiguous = 0;
};

// Marks disengagement presence by exact (date, manufacturer, vehicle_type)
// match or by the crash report's own mention, copying initiator and cause
// flags into the crash record and its raw fields.
LinkStats link_disengagements(std::vector<CrashRecord>& crashes,
                              const std::vector<DisengagementRecord>& diseng);

// Throws Error(UnclassifiableRecord) when neither mode rule fires.
DrivingMode classify_mode(const CrashRecord& record);

struct ClassifiedRecords {
  std::vector<CrashRecord> autonomous;
  std::vector<CrashRecord> conventional;
  std::vector<std::pair<std::string, std::string>> excluded;  // id, reason
};

ClassifiedRecords classify_all(const std::vector<CrashRecord>& records);

// Coded categorical value for every catalog variable of one record.
// Continuous variables are cut at their catalog threshold; boundary values
// land on the reference side. Range excursions append to `warnings`.
std::map<std::string, std::string> discretize(
    const CrashRecord& record, const VariableCatalog& catalog,
    std::vector<std::string>* warnings = nullptr);

CodedTable build_coded_table(const std::vector<CrashRecord>& records,
                             const VariableCatalog& catalog,
                             const std::string& mode_label,
                             std::vector<std::string>* warnings = nullptr);

// Sub-selects a model design from the full table. Terms are either a
// variable name (expands to all its non-reference dummies) or a single
// "variable=level" dummy.
CodedDataset select_design(const CodedTable& table,
                           const std::string& response_name,
                           const std::vector<std::string>& terms,
                           Nesting nesting);

CodedDataset encode_design(const std::vector<CrashRecord>& records,
                           const VariableCatalog& catalog,
                           const std::string& response_name,
                           const std::vector<std::string>& terms,
                           Nesting nesting);

void save_coded_table(const CodedTable& table,
                      const std::filesystem::path& csv_path,
                      const std::filesystem::path& meta_path,
                      const std::vector<std::string>& header_comments);

CodedTable load_coded_table(const std::filesystem::path& csv_path,
                            const std::filesystem::path& meta_path);

// Strict locale-independent numeric parse of a whole field.
double parse_numeric(const std::string& text, const std::string& context);

}  // namespace hierlogit
