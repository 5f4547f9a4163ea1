#include "core/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hierlogit {

using nlohmann::json;

// --------------------------------------------------------------------------
// Scenarios
// --------------------------------------------------------------------------

void TruthScenario::validate() const {
  if (groups < 2) throw Error(ErrorCode::InvalidConfig, "scenario needs J >= 2");
  if (n_per_group < 1) {
    throw Error(ErrorCode::InvalidConfig, "scenario needs n_per_group >= 1");
  }
  if (static_cast<int>(gamma.size()) != num_fixed) {
    throw Error(ErrorCode::InvalidConfig, "gamma size vs num_fixed");
  }
  if (structure != ModelStructure::FixedOnly && !(sigma0 > 0.0)) {
    throw Error(ErrorCode::NonPositiveVariance, "scenario sigma0");
  }
  if (slope_terms.size() != slope_sigmas.size()) {
    throw Error(ErrorCode::InvalidConfig, "slope_terms vs slope_sigmas");
  }
  if (!slope_terms.empty() &&
      structure != ModelStructure::RandomInterceptAndSlopes) {
    throw Error(ErrorCode::InvalidConfig,
                "slopes need random_intercept_and_slopes");
  }
  for (double sd : slope_sigmas) {
    if (!(sd > 0.0)) throw Error(ErrorCode::NonPositiveVariance, "slope sd");
  }
}

HierarchicalModelSpec TruthScenario::to_model_spec() const {
  HierarchicalModelSpec spec;
  spec.label = label;
  spec.response_name = "y";
  for (int p = 0; p < num_fixed; ++p) {
    spec.fixed_terms.push_back("x" + std::to_string(p + 1));
  }
  spec.random_slope_terms = slope_terms;
  spec.structure = structure;
  spec.nesting = Nesting::VehicleUnit;
  spec.priors = priors;
  return spec;
}

TruthScenario parse_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("scenario: ") + e.what());
  }
  TruthScenario scenario;
  try {
    scenario.label = doc.value("label", "scenario");
    scenario.structure =
        structure_from_name(doc.value("structure", "random_intercept"));
    scenario.num_fixed = doc.value("num_fixed", 1);
    scenario.groups = doc.value("groups", 10);
    scenario.n_per_group = doc.value("n_per_group", 50);
    scenario.seed = doc.value("seed", 0ULL);
    scenario.gamma00 = doc.value("gamma00", 0.0);
    scenario.gamma = doc.value("gamma", std::vector<double>{});
    if (scenario.gamma.empty() && scenario.num_fixed > 0) {
      scenario.gamma.assign(scenario.num_fixed, 0.0);
    }
    scenario.sigma0 = doc.value("sigma0", 0.5);
    scenario.slope_terms =
        doc.value("slope_terms", std::vector<std::string>{});
    scenario.slope_sigmas = doc.value("slope_sigmas", std::vector<double>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("scenario: ") + e.what());
  }
  scenario.validate();
  return scenario;
}

TruthScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

// --------------------------------------------------------------------------
// Synthetic generation
// --------------------------------------------------------------------------

SyntheticData generate_synthetic(const TruthScenario& scenario) {
  scenario.validate();
  Rng rng(scenario.seed);
  const int n = scenario.groups * scenario.n_per_group;
  const int p = scenario.num_fixed;

  SyntheticData out;
  CodedDataset& data = out.data;
  data.response.resize(n);
  data.fixed_design.resize(n, p);
  data.group_index_l2.resize(n);
  data.response_name = "y";
  data.mode_label = "synthetic";
  for (int c = 0; c < p; ++c) {
    data.column_names.push_back("x" + std::to_string(c + 1));
  }
  for (int j = 0; j < scenario.groups; ++j) {
    char label[16];
    std::snprintf(label, sizeof(label), "g%03d", j);
    data.group_labels_l2.push_back(label);
  }
  data.level2_design.resize(scenario.groups, 0);

  for (int i = 0; i < n; ++i) {
    data.group_index_l2[i] = i / scenario.n_per_group;
    for (int c = 0; c < p; ++c) {
      data.fixed_design(i, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
  }

  const bool random_intercept = scenario.structure != ModelStructure::FixedOnly;
  out.true_mu0 = Eigen::VectorXd::Zero(scenario.groups);
  if (random_intercept) {
    for (int j = 0; j < scenario.groups; ++j) {
      out.true_mu0(j) = rng.normal(0.0, scenario.sigma0);
    }
  }
  const int num_slopes = static_cast<int>(scenario.slope_terms.size());
  std::vector<int> slope_cols;
  for (const auto& term : scenario.slope_terms) {
    auto it = std::find(data.column_names.begin(), data.column_names.end(),
                        term);
    if (it == data.column_names.end()) {
      throw Error(ErrorCode::InvalidConfig,
                  "slope term '" + term + "' is not a synthetic column");
    }
    slope_cols.push_back(
        static_cast<int>(it - data.column_names.begin()));
  }
  out.true_mu_slopes = Eigen::MatrixXd::Zero(num_slopes, scenario.groups);
  for (int k = 0; k < num_slopes; ++k) {
    for (int j = 0; j < scenario.groups; ++j) {
      out.true_mu_slopes(k, j) = rng.normal(0.0, scenario.slope_sigmas[k]);
    }
  }

  const double intercept = std::clamp(scenario.gamma00, -20.0, 20.0);
  for (int i = 0; i < n; ++i) {
    const int j = data.group_index_l2[i];
    double eta = intercept + out.true_mu0(j);
    for (int c = 0; c < p; ++c) {
      eta += scenario.gamma[c] * data.fixed_design(i, c);
    }
    for (int k = 0; k < num_slopes; ++k) {
      eta += out.true_mu_slopes(k, j) * data.fixed_design(i, slope_cols[k]);
    }
    data.response(i) = rng.bernoulli(inv_logit(eta)) ? 1.0 : 0.0;
  }
  return out;
}

// --------------------------------------------------------------------------
// Grid oracle
// --------------------------------------------------------------------------

CodedDataset intercept_only_dataset(const std::vector<int>& responses) {
  CodedDataset data;
  const int n = static_cast<int>(responses.size());
  data.response.resize(n);
  for (int i = 0; i < n; ++i) data.response(i) = responses[i] ? 1.0 : 0.0;
  data.fixed_design.resize(n, 0);
  data.group_index_l2.assign(n, 0);
  data.group_labels_l2 = {"all"};
  data.level2_design.resize(1, 0);
  data.response_name = "y";
  data.mode_label = "toy";
  return data;
}

GridPosterior grid_posterior_oracle(const CodedDataset& data,
                                    const PriorConfig& prior, double lo,
                                    double hi, double step) {
  if (data.p() != 0) {
    throw Error(ErrorCode::InvalidConfig,
                "grid oracle expects an intercept-only dataset");
  }
  if (!(step > 0.0) || !(hi > lo)) {
    throw Error(ErrorCode::InvalidConfig, "grid oracle range");
  }
  HierarchicalModelSpec spec;
  spec.response_name = data.response_name;
  spec.structure = ModelStructure::FixedOnly;
  spec.priors = prior;

  const ParameterLayout layout = ParameterLayout::make(spec, data);
  const int m = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  GridPosterior grid;
  grid.step = step;
  grid.grid.resize(m);
  grid.unnormalized_logdensity.resize(m);
  ParameterVector params = ParameterVector::zeros(layout);
  for (int i = 0; i < m; ++i) {
    const double g = lo + step * i;
    grid.grid(i) = g;
    params.values(layout.gamma00()) = g;
    grid.unnormalized_logdensity(i) = log_posterior(spec, params, data);
  }
  const double max_lp = grid.unnormalized_logdensity.maxCoeff();
  Eigen::VectorXd density =
      (grid.unnormalized_logdensity.array() - max_lp).exp();

  auto trapezoid = [&](const Eigen::VectorXd& f) {
    double total = f.sum() - 0.5 * (f(0) + f(m - 1));
    return total * step;
  };
  const double z = trapezoid(density);
  grid.normalized_density = density / z;

  const double edge_mass =
      0.5 * (grid.normalized_density(0) + grid.normalized_density(m - 1)) *
      step;
  if (edge_mass > 1e-4) {
    throw Error(ErrorCode::RangeTooNarrow,
                "posterior mass at the grid endpoints; widen [lo, hi]");
  }
  Eigen::VectorXd weighted = grid.grid.cwiseProduct(grid.normalized_density);
  grid.mean = trapezoid(weighted);
  Eigen::VectorXd second =
      (grid.grid.array() - grid.mean).square() *
      grid.normalized_density.array();
  grid.sd = std::sqrt(trapezoid(second));
  return grid;
}

// --------------------------------------------------------------------------
// Bundled fixture
// --------------------------------------------------------------------------

namespace {

// Civil-date helpers (proleptic Gregorian day counts).
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

Date civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
              static_cast<int>(d)};
}

std::string date_plus(const Date& base, int days) {
  return civil_from_days(days_from_civil(base.year, base.month, base.day) +
                         days)
      .str();
}

template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[rng.below(i)]);
  }
}

struct LevelCount {
  const char* level;
  int autonomous;
  int conventional;
};

// Target per-mode level counts for the bundled 96/84 fixture.
struct VariableTargets {
  const char* name;
  const char* rest_level;  // level absorbing the remaining rows
  std::vector<LevelCount> counts;
};

const std::vector<VariableTargets>& fixture_targets() {
  static const std::vector<VariableTargets> targets = {
      {"injury", "no", {{"yes", 22, 14}}},
      {"time_of_day", "night", {{"daytime", 60, 69}}},
      {"involved_nonmotor", "yes", {{"no", 78, 58}}},
      {"intersection", "no", {{"yes", 63, 56}}},
      {"light", "dark", {{"daylight", 42, 79}}},
      {"roadway_surface", "wet", {{"dry", 91, 75}, {"unknown", 2, 3}}},
      {"metro_stop", "absence", {{"presence", 45, 45}}},
      {"trees", "absence", {{"presence", 77, 61}}},
      {"land_use",
       "residential",
       {{"commercial", 26, 8}, {"industrial", 3, 5}, {"mixed_or_public", 39, 48}}},
      {"weather",
       "clear",
       {{"cloudy", 5, 7}, {"fog_visibility", 2, 0}, {"raining", 3, 3},
        {"unknown", 1, 0}}},
      {"muni_line", "absence", {{"presence", 76, 72}}},
      {"dvf",
       "ge40040",
       {{"lt3418", 30, 32}, {"3418_to_11982", 33, 23},
        {"11982_to_40040", 28, 24}}},
      {"pavement_markings", "poor", {{"adequate", 90, 78}}},
      {"street_classification",
       "residential",
       {{"high", 1, 0}, {"arterial", 20, 16}, {"collector", 33, 29}}},
      {"one_way", "no", {{"yes", 34, 28}}},
      {"divided_median", "absence", {{"presence", 16, 8}}},
      {"marked_centerline", "absence", {{"presence", 40, 41}}},
      {"bike_lane", "absence", {{"presence", 26, 30}}},
      {"on_street_parking", "absence", {{"presence", 81, 73}}},
      {"off_street_parking", "absence", {{"presence", 95, 81}}},
      {"traffic_calming", "absence", {{"presence", 27, 26}}},
      {"sidewalk", "absence_or_one_side", {{"both_sides", 91, 77}}},
      {"turning_movement", "no", {{"yes", 12, 31}}},
      {"vehicle_state", "stopped", {{"moving", 64, 47}}},
      {"num_vehicles", "one", {{"two", 84, 69}, {"three", 1, 2}}},
      {"crash_type",
       "other",
       {{"rear_end", 57, 34}, {"sideswipe", 14, 18}, {"head_on", 5, 6},
        {"hit_pedestrian", 6, 8}, {"hit_non_motor_vehicle", 7, 8}}},
  };
  return targets;
}

// Continuous columns: target counts for the non-reference side, with the
// value ranges each side draws from (integers).
struct ContinuousTargets {
  const char* name;
  int nonref_autonomous;
  int nonref_conventional;
  int nonref_lo, nonref_hi;  // inclusive integer ranges
  int ref_lo, ref_hi;
};

const std::vector<ContinuousTargets>& fixture_continuous() {
  static const std::vector<ContinuousTargets> targets = {
      {"schools", 20, 16, 5, 9, 0, 4},
      {"parks", 6, 5, 5, 6, 0, 4},
      {"driveways", 65, 51, 1, 3, 4, 8},  // non-reference side is < 4
      {"crash_lanes", 36, 27, 3, 6, 1, 2},
      {"street_width", 21, 15, 61, 140, 22, 60},
      {"speed_limit", 11, 8, 26, 30, 15, 25},
      {"slope", 42, 31, 4, 10, 1, 3},
  };
  return targets;
}

std::vector<std::string> assign_levels(int n,
                                       const std::vector<LevelCount>& counts,
                                       bool autonomous,
                                       const std::string& rest, Rng& rng) {
  std::vector<std::string> out;
  for (const auto& c : counts) {
    const int k = autonomous ? c.autonomous : c.conventional;
    out.insert(out.end(), k, c.level);
  }
  if (static_cast<int>(out.size()) > n) {
    throw Error(ErrorCode::InvalidConfig, "fixture counts exceed rows");
  }
  out.insert(out.end(), n - out.size(), rest);
  shuffle(out, rng);
  return out;
}

struct ManufacturerCount {
  const char* name;
  const char* vehicle_type;
  int autonomous;
  int conventional;
};

const std::vector<ManufacturerCount>& fixture_manufacturers() {
  static const std::vector<ManufacturerCount> counts = {
      {"aurora_innovation", "sedan", 0, 1}, {"cruise_llc", "bolt", 79, 53},
      {"lyft", "fusion", 0, 2},             {"waymo", "pacifica", 8, 9},
      {"zoox", "highlander", 9, 19},
  };
  return counts;
}

const std::vector<LevelCount>& fixture_years() {
  static const std::vector<LevelCount> counts = {
      {"2016", 9, 17},  {"2017", 20, 16}, {"2018", 0, 1},
      {"2019", 21, 15}, {"2020", 45, 34}, {"2021", 1, 1},
  };
  return counts;
}

}  // namespace

namespace {

struct FixtureRow {
  bool autonomous = false;
  std::map<std::string, std::string> fields;
};

// Terms of the bundled example models (run_fixture.json). Level
// assignments that separate any of them from its response would leave
// that coefficient likelihood-free, so those draws are rejected.
struct BalanceCheck {
  bool autonomous;
  const char* response;        // injury | rear_end (from crash_type)
  const char* variable;
  const char* level;
};

const std::vector<BalanceCheck>& fixture_balance_checks() {
  static const std::vector<BalanceCheck> checks = {
      {true, "injury", "time_of_day", "daytime"},
      {true, "injury", "dvf", "lt3418"},
      {true, "injury", "weather", "raining"},
      {true, "injury", "land_use", "mixed_or_public"},
      {true, "injury", "muni_line", "presence"},
      {true, "injury", "bike_lane", "presence"},
      {true, "injury", "sidewalk", "both_sides"},
      {true, "injury", "vehicle_state", "moving"},
      {false, "injury", "dvf", "lt3418"},
      {false, "injury", "dvf", "3418_to_11982"},
      {false, "injury", "dvf", "11982_to_40040"},
      {false, "injury", "crash_lanes", ">2"},
      {false, "injury", "bike_lane", "presence"},
      {false, "injury", "turning_movement", "yes"},
      {false, "injury", "vehicle_state", "moving"},
      {true, "rear_end", "trees", "presence"},
      {true, "rear_end", "involved_nonmotor", "no"},
      {true, "rear_end", "on_street_parking", "presence"},
      {true, "rear_end", "driveways", "<4"},
      {true, "rear_end", "divided_median", "presence"},
      {true, "rear_end", "disengagement", "presence"},
      {true, "rear_end", "deceleration", "presence"},
      {true, "rear_end", "turning_movement", "yes"},
      {false, "rear_end", "dvf", "lt3418"},
      {false, "rear_end", "roadway_surface", "dry"},
      {false, "rear_end", "bike_lane", "presence"},
      {false, "rear_end", "slope", ">3"},
      {false, "rear_end", "divided_median", "presence"},
      {false, "rear_end", "turning_movement", "yes"},
  };
  return checks;
}

bool row_matches_level(const FixtureRow& row, const BalanceCheck& check) {
  const std::string& raw = row.fields.at(check.variable);
  const std::string level(check.level);
  if (level == ">2") return parse_numeric(raw, "balance") > 2.0;
  if (level == ">3") return parse_numeric(raw, "balance") > 3.0;
  if (level == "<4") return parse_numeric(raw, "balance") < 4.0;
  return raw == level;
}

bool balanced(const std::vector<FixtureRow>& rows) {
  for (const auto& check : fixture_balance_checks()) {
    int cell[2][2] = {{0, 0}, {0, 0}};
    for (const auto& row : rows) {
      if (row.autonomous != check.autonomous) continue;
      const bool positive =
          std::string(check.response) == "injury"
              ? row.fields.at("injury") == "yes"
              : row.fields.at("crash_type") == "rear_end";
      cell[row_matches_level(row, check) ? 1 : 0][positive ? 1 : 0] += 1;
    }
    if (cell[0][0] < 1 || cell[0][1] < 1 || cell[1][0] < 1 ||
        cell[1][1] < 1) {
      return false;
    }
  }
  return true;
}

}  // namespace

void write_fixture(const std::filesystem::path& crashes_csv,
                   const std::filesystem::path& disengagements_csv) {
  const int n_autonomous = 96;
  const int n_conventional = 84;
  const int n_disengaged = 36;
  const int n_key_matched = 26;  // present in the disengagement table

  using Row = FixtureRow;
  std::vector<Row> rows;
  std::vector<int> disengaged;
  Rng rng(0);
  for (int attempt = 0;; ++attempt) {
    if (attempt >= 1000) {
      throw Error(ErrorCode::InvalidConfig,
                  "fixture generation could not balance the example models");
    }
    rng = Rng(0x7C3A5EEDF00D1234ULL + static_cast<std::uint64_t>(attempt));
    rows.assign(n_autonomous + n_conventional, Row{});
    for (int i = 0; i < n_autonomous; ++i) rows[i].autonomous = true;

  // Categorical columns, one independent shuffle per mode and variable.
  for (const auto& target : fixture_targets()) {
    auto a_values = assign_levels(n_autonomous, target.counts, true,
                                  target.rest_level, rng);
    auto c_values = assign_levels(n_conventional, target.counts, false,
                                  target.rest_level, rng);
    for (int i = 0; i < n_autonomous; ++i) {
      rows[i].fields[target.name] = a_values[i];
    }
    for (int i = 0; i < n_conventional; ++i) {
      rows[n_autonomous + i].fields[target.name] = c_values[i];
    }
  }

  // Continuous columns: pick the side per target count, then a value in
  // that side's range.
  for (const auto& target : fixture_continuous()) {
    for (int mode = 0; mode < 2; ++mode) {
      const bool autonomous = mode == 0;
      const int n = autonomous ? n_autonomous : n_conventional;
      const int nonref =
          autonomous ? target.nonref_autonomous : target.nonref_conventional;
      std::vector<bool> side(n, false);
      std::fill(side.begin(), side.begin() + nonref, true);
      shuffle(side, rng);
      for (int i = 0; i < n; ++i) {
        const int lo = side[i] ? target.nonref_lo : target.ref_lo;
        const int hi = side[i] ? target.nonref_hi : target.ref_hi;
        const long value =
            lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(
                     hi - lo + 1)));
        rows[(autonomous ? 0 : n_autonomous) + i].fields[target.name] =
            std::to_string(value);
      }
    }
  }

  // Manufacturer, vehicle type, production year.
  for (int mode = 0; mode < 2; ++mode) {
    const bool autonomous = mode == 0;
    const int n = autonomous ? n_autonomous : n_conventional;
    const int offset = autonomous ? 0 : n_autonomous;
    std::vector<const ManufacturerCount*> makers;
    for (const auto& m : fixture_manufacturers()) {
      const int k = autonomous ? m.autonomous : m.conventional;
      makers.insert(makers.end(), k, &m);
    }
    shuffle(makers, rng);
    std::vector<LevelCount> years = fixture_years();
    auto year_values =
        assign_levels(n, years, autonomous, years.back().level, rng);
    for (int i = 0; i < n; ++i) {
      rows[offset + i].fields["manufacturer"] = makers[i]->name;
      rows[offset + i].fields["vehicle_type"] = makers[i]->vehicle_type;
      rows[offset + i].fields["vehicle_year"] = year_values[i];
    }
  }

  // Disengagement block: presence only in the autonomous mode, cause flags
  // and the initiator only on disengaged rows.
  std::vector<int> autonomous_rows(n_autonomous);
  std::iota(autonomous_rows.begin(), autonomous_rows.end(), 0);
  shuffle(autonomous_rows, rng);
  disengaged.assign(autonomous_rows.begin(),
                    autonomous_rows.begin() + n_disengaged);

  for (int i = 0; i < n_autonomous + n_conventional; ++i) {
    rows[i].fields["disengagement"] = "absence";
    rows[i].fields["initiator"] = "no";
    rows[i].fields["unwanted_other_participant"] = "absence";
    rows[i].fields["unwanted_av_movement"] = "absence";
    rows[i].fields["changing_lanes"] = "absence";
    rows[i].fields["deceleration"] = "absence";
    rows[i].fields["reported_mode"] = rows[i].autonomous ? "engaged" : "manual";
  }
  auto mark = [&](const std::vector<int>& rows_in, const char* field, int k) {
    std::vector<int> candidates = rows_in;
    shuffle(candidates, rng);
    for (int i = 0; i < k; ++i) rows[candidates[i]].fields[field] = "presence";
  };
  for (int idx : disengaged) {
    rows[idx].fields["disengagement"] = "presence";
    rows[idx].fields["reported_mode"] = "";
  }
  {
    std::vector<int> d = disengaged;
    shuffle(d, rng);
    rows[d[0]].fields["initiator"] = "av_system";
    for (size_t i = 1; i < d.size(); ++i) {
      rows[d[i]].fields["initiator"] = "test_driver";
    }
  }
  mark(disengaged, "unwanted_other_participant", 19);
  mark(disengaged, "unwanted_av_movement", 1);
  mark(disengaged, "changing_lanes", 32);
  mark(disengaged, "deceleration", 20);

  if (balanced(rows)) break;
  }

  // Dates. Key-matched crashes get a reserved block mirrored into the
  // disengagement table; everything else stays outside that block so no
  // triple collides by accident.
  std::vector<int> matched(disengaged.begin(),
                           disengaged.begin() + n_key_matched);
  const Date matched_base{2019, 6, 1};
  for (int i = 0; i < n_key_matched; ++i) {
    rows[matched[i]].fields["date"] = date_plus(matched_base, i);
  }
  const Date other_base{2020, 1, 1};
  int day = 0;
  for (int i = 0; i < n_autonomous + n_conventional; ++i) {
    if (rows[i].fields.count("date")) continue;
    rows[i].fields["date"] = date_plus(other_base, day++);
  }

  // Disengagement table: mirrors of the matched crashes plus records that
  // never led to a crash.
  std::vector<std::vector<std::string>> diseng_rows;
  for (int idx : matched) {
    diseng_rows.push_back({rows[idx].fields.at("date"),
                           rows[idx].fields.at("manufacturer"),
                           rows[idx].fields.at("vehicle_type"),
                           rows[idx].fields.at("initiator"),
                           rows[idx].fields.at("unwanted_other_participant"),
                           rows[idx].fields.at("unwanted_av_movement"),
                           rows[idx].fields.at("changing_lanes"),
                           rows[idx].fields.at("deceleration")});
  }
  const Date extra_base{2021, 6, 1};
  for (int i = 0; i < 15; ++i) {
    const auto& maker =
        fixture_manufacturers()[i % fixture_manufacturers().size()];
    diseng_rows.push_back({date_plus(extra_base, i), maker.name,
                           maker.vehicle_type, "test_driver",
                           i % 3 == 0 ? "presence" : "absence", "absence",
                           i % 2 == 0 ? "presence" : "absence", "absence"});
  }
  write_csv(disengagements_csv,
            {"date", "manufacturer", "vehicle_type", "initiator",
             "unwanted_other_participant", "unwanted_av_movement",
             "changing_lanes", "deceleration"},
            diseng_rows);

  // Shuffle the final row order and assign ids.
  std::vector<int> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);

  std::vector<std::string> header = {"crash_id", "date", "manufacturer",
                                     "vehicle_type", "vehicle_year",
                                     "reported_mode"};
  std::vector<std::string> variable_columns = {
      "time_of_day", "involved_nonmotor", "intersection", "light",
      "roadway_surface", "metro_stop", "trees", "land_use", "weather",
      "muni_line", "dvf", "pavement_markings", "schools", "parks",
      "street_classification", "one_way", "divided_median",
      "marked_centerline", "bike_lane", "on_street_parking",
      "off_street_parking", "traffic_calming", "sidewalk", "driveways",
      "crash_lanes", "street_width", "speed_limit", "slope",
      "turning_movement", "vehicle_state", "num_vehicles", "disengagement",
      "initiator", "unwanted_other_participant", "unwanted_av_movement",
      "changing_lanes", "deceleration", "injury", "crash_type"};
  header.insert(header.end(), variable_columns.begin(),
                variable_columns.end());

  std::vector<std::vector<std::string>> crash_rows;
  int id = 1;
  for (int idx : order) {
    auto& fields = rows[idx].fields;
    char crash_id[16];
    std::snprintf(crash_id, sizeof(crash_id), "AV-%04d", id++);
    std::vector<std::string> row = {crash_id, fields.at("date"),
                                    fields.at("manufacturer"),
                                    fields.at("vehicle_type"),
                                    fields.at("vehicle_year"),
                                    fields.at("reported_mode")};
    for (const auto& column : variable_columns) {
      row.push_back(fields.at(column));
    }
    crash_rows.push_back(std::move(row));
  }
  write_csv(crashes_csv, header, crash_rows);
}

std::string fixture_catalog_json() {
  return R"JSON({
  "crash_type_column": "crash_type",
  "crash_type_groups": ["rear_end", "sideswipe", "head_on", "hit_pedestrian",
                        "hit_non_motor_vehicle", "other"],
  "responses": [
    {"name": "injury", "source": "injury", "levels": ["no", "yes"],
     "positive": "yes"},
    {"name": "rear_end", "source": "crash_type",
     "levels": ["rear_end", "sideswipe", "head_on", "hit_pedestrian",
                "hit_non_motor_vehicle", "other"],
     "positive": "rear_end"}
  ],
  "variables": [
    {"name": "time_of_day", "kind": "categorical", "category": "environment",
     "levels": ["night", "daytime"], "reference": "night"},
    {"name": "involved_nonmotor", "kind": "categorical",
     "category": "environment", "levels": ["yes", "no"], "reference": "yes"},
    {"name": "intersection", "kind": "categorical", "category": "environment",
     "levels": ["no", "yes"], "reference": "no"},
    {"name": "light", "kind": "categorical", "category": "environment",
     "levels": ["dark", "daylight"], "reference": "dark"},
    {"name": "roadway_surface", "kind": "categorical",
     "category": "environment", "levels": ["wet", "dry", "unknown"],
     "reference": "wet"},
    {"name": "metro_stop", "kind": "categorical", "category": "environment",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "trees", "kind": "categorical", "category": "environment",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "land_use", "kind": "categorical", "category": "environment",
     "levels": ["residential", "commercial", "industrial", "mixed_or_public"],
     "reference": "residential"},
    {"name": "weather", "kind": "categorical", "category": "environment",
     "levels": ["clear", "cloudy", "fog_visibility", "raining", "unknown"],
     "reference": "clear"},
    {"name": "muni_line", "kind": "categorical", "category": "environment",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "dvf", "kind": "categorical", "category": "environment",
     "levels": ["ge40040", "lt3418", "3418_to_11982", "11982_to_40040"],
     "reference": "ge40040"},
    {"name": "pavement_markings", "kind": "categorical",
     "category": "environment", "levels": ["poor", "adequate"],
     "reference": "poor"},
    {"name": "schools", "kind": "continuous", "category": "environment",
     "cutoff": 4, "nonref_side": "above", "integer_count": true,
     "min": 0, "max": 9},
    {"name": "parks", "kind": "continuous", "category": "environment",
     "cutoff": 4, "nonref_side": "above", "integer_count": true,
     "min": 0, "max": 6},
    {"name": "street_classification", "kind": "categorical",
     "category": "road",
     "levels": ["residential", "high", "arterial", "collector"],
     "reference": "residential"},
    {"name": "one_way", "kind": "categorical", "category": "road",
     "levels": ["no", "yes"], "reference": "no"},
    {"name": "divided_median", "kind": "categorical", "category": "road",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "marked_centerline", "kind": "categorical", "category": "road",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "bike_lane", "kind": "categorical", "category": "road",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "on_street_parking", "kind": "categorical", "category": "road",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "off_street_parking", "kind": "categorical", "category": "road",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "traffic_calming", "kind": "categorical", "category": "road",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "sidewalk", "kind": "categorical", "category": "road",
     "levels": ["absence_or_one_side", "both_sides"],
     "reference": "absence_or_one_side"},
    {"name": "driveways", "kind": "continuous", "category": "road",
     "cutoff": 4, "nonref_side": "below", "integer_count": true,
     "min": 1, "max": 8},
    {"name": "crash_lanes", "kind": "continuous", "category": "road",
     "cutoff": 2, "nonref_side": "above", "integer_count": true,
     "min": 1, "max": 6},
    {"name": "street_width", "kind": "continuous", "category": "road",
     "cutoff": 60, "nonref_side": "above", "min": 22, "max": 140},
    {"name": "speed_limit", "kind": "continuous", "category": "road",
     "cutoff": 25, "nonref_side": "above", "min": 15, "max": 30},
    {"name": "slope", "kind": "continuous", "category": "road",
     "cutoff": 3, "nonref_side": "above", "min": 1, "max": 10},
    {"name": "turning_movement", "kind": "categorical", "category": "vehicle",
     "levels": ["no", "yes"], "reference": "no"},
    {"name": "manufacturer", "kind": "categorical", "category": "vehicle",
     "levels": ["cruise_llc", "aurora_innovation", "lyft", "waymo", "zoox"],
     "reference": "cruise_llc"},
    {"name": "vehicle_year", "kind": "categorical", "category": "vehicle",
     "levels": ["2016", "2017", "2018", "2019", "2020", "2021"],
     "reference": "2016"},
    {"name": "vehicle_state", "kind": "categorical", "category": "vehicle",
     "levels": ["stopped", "moving"], "reference": "stopped"},
    {"name": "num_vehicles", "kind": "categorical", "category": "vehicle",
     "levels": ["one", "two", "three"], "reference": "one"},
    {"name": "disengagement", "kind": "categorical", "category": "vehicle",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "initiator", "kind": "categorical", "category": "vehicle",
     "levels": ["no", "av_system", "test_driver"], "reference": "no"},
    {"name": "unwanted_other_participant", "kind": "categorical",
     "category": "vehicle", "levels": ["absence", "presence"],
     "reference": "absence"},
    {"name": "unwanted_av_movement", "kind": "categorical",
     "category": "vehicle", "levels": ["absence", "presence"],
     "reference": "absence"},
    {"name": "changing_lanes", "kind": "categorical", "category": "vehicle",
     "levels": ["absence", "presence"], "reference": "absence"},
    {"name": "deceleration", "kind": "categorical", "category": "vehicle",
     "levels": ["absence", "presence"], "reference": "absence"}
  ]
}
)JSON";
}

}  // namespace hierlogit
