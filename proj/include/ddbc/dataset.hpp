#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddbc/bnn.hpp"
#include "ddbc/util.hpp"

namespace ddbc {

struct ColumnSchema {
  enum class Type { Numeric, Categorical };
  std::string name;
  Type type = Type::Numeric;
};

// Column-major typed table; rows with missing or unparseable values are
// dropped during ingestion and counted, not errors.
struct RawTable {
  std::vector<ColumnSchema> schema;
  std::vector<std::vector<double>> numeric;       // per schema index
  std::vector<std::vector<std::string>> text;     // per schema index
  size_t ingested_rows = 0;
  size_t dropped_rows = 0;

  size_t rows() const {
    for (size_t i = 0; i < schema.size(); ++i)
      if (schema[i].type == ColumnSchema::Type::Numeric)
        return numeric[i].size();
      else
        return text[i].size();
    return 0;
  }

  int column_index(const std::string& name) const {
    for (size_t i = 0; i < schema.size(); ++i)
      if (schema[i].name == name) return int(i);
    return -1;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(std::uint8_t(s[a]))) ++a;
  while (b > a && std::isspace(std::uint8_t(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

inline RawTable ingest_csv(std::istream& is,
                           const std::vector<ColumnSchema>& schema) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("csv: empty file");
  const auto header = detail::split_csv_line(line);
  std::vector<int> position(schema.size(), -1);
  for (size_t i = 0; i < schema.size(); ++i) {
    for (size_t j = 0; j < header.size(); ++j)
      if (header[j] == schema[i].name) position[i] = int(j);
    if (position[i] < 0)
      throw ValidationError("csv: missing column " + schema[i].name);
  }
  RawTable table;
  table.schema = schema;
  table.numeric.resize(schema.size());
  table.text.resize(schema.size());
  while (std::getline(is, line)) {
    if (detail::trim(line).empty()) continue;
    ++table.ingested_rows;
    const auto fields = detail::split_csv_line(line);
    std::vector<double> nums(schema.size(), 0.0);
    std::vector<std::string> strs(schema.size());
    bool ok = true;
    for (size_t i = 0; i < schema.size() && ok; ++i) {
      if (size_t(position[i]) >= fields.size()) {
        ok = false;
        break;
      }
      const std::string& raw = fields[size_t(position[i])];
      if (raw.empty()) {
        ok = false;  // missing value
        break;
      }
      if (schema[i].type == ColumnSchema::Type::Numeric) {
        try {
          size_t used = 0;
          nums[i] = std::stod(raw, &used);
          if (used != raw.size()) ok = false;
        } catch (const std::exception&) {
          ok = false;
        }
      } else {
        strs[i] = raw;
      }
    }
    if (!ok) {
      ++table.dropped_rows;
      continue;
    }
    for (size_t i = 0; i < schema.size(); ++i) {
      if (schema[i].type == ColumnSchema::Type::Numeric)
        table.numeric[i].push_back(nums[i]);
      else
        table.text[i].push_back(strs[i]);
    }
  }
  if (table.rows() == 0)
    throw ValidationError("csv: no usable rows");
  return table;
}

// --- binarization ----------------------------------------------------------

// Rule per retained column: numeric columns map to 1 above a threshold
// (strictly; ties go to 0) and the threshold defaults to the column mean;
// categorical columns expand into one indicator feature per category.
struct BinRule {
  enum class Kind { AboveMean, OneHot };
  std::string column;
  Kind kind = Kind::AboveMean;
  std::optional<double> threshold;       // AboveMean; filled when computed
  std::vector<std::string> categories;   // OneHot
};

struct BinarizationSpec {
  std::vector<BinRule> feature_rules;
  BinRule target_rule;  // AboveMean over the label column
};

// The ten-column housing schema and its standard binarization: the
// categorical proximity column one-hot first, then the numeric columns, and
// the median house value as the label.
inline std::vector<ColumnSchema> housing_schema() {
  using T = ColumnSchema::Type;
  return {
      {"longitude", T::Numeric},        {"latitude", T::Numeric},
      {"housing_median_age", T::Numeric}, {"total_rooms", T::Numeric},
      {"total_bedrooms", T::Numeric},   {"population", T::Numeric},
      {"households", T::Numeric},       {"median_income", T::Numeric},
      {"median_house_value", T::Numeric}, {"ocean_proximity", T::Categorical},
  };
}

inline std::string normalize_category(const std::string& raw) {
  std::string out;
  for (char ch : raw) {
    if (ch == '<') continue;
    out.push_back(ch == ' ' ? '_' : char(std::tolower(std::uint8_t(ch))));
  }
  return out;
}

inline BinarizationSpec housing_binarization_spec() {
  BinarizationSpec spec;
  BinRule ocean;
  ocean.column = "ocean_proximity";
  ocean.kind = BinRule::Kind::OneHot;
  ocean.categories = {"1h_ocean", "inland", "island", "near_bay",
                      "near_ocean"};
  spec.feature_rules.push_back(std::move(ocean));
  for (const char* col :
       {"households", "housing_median_age", "latitude", "longitude",
        "median_income", "population", "total_bedrooms", "total_rooms"}) {
    BinRule r;
    r.column = col;
    r.kind = BinRule::Kind::AboveMean;
    spec.feature_rules.push_back(std::move(r));
  }
  spec.target_rule.column = "median_house_value";
  spec.target_rule.kind = BinRule::Kind::AboveMean;
  return spec;
}

struct BinaryDataset {
  std::vector<std::string> feature_names;
  std::vector<Entity> entities;
  std::vector<int> labels;
  size_t ingested_rows = 0;
  size_t dropped_rows = 0;
};

namespace detail {

inline double column_mean(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / double(xs.size());
}

}  // namespace detail

// Thresholds absent from the spec are computed from the table and written
// back, so a persisted spec reproduces the exact same dataset later.
inline BinaryDataset binarize(const RawTable& table, BinarizationSpec& spec) {
  const size_t rows = table.rows();
  BinaryDataset ds;
  ds.ingested_rows = table.ingested_rows;
  ds.dropped_rows = table.dropped_rows;

  std::vector<std::vector<std::uint8_t>> feature_cols;
  auto resolve = [&](BinRule& rule) {
    const int ci = table.column_index(rule.column);
    if (ci < 0) throw ValidationError("binarize: unknown column " + rule.column);
    return ci;
  };

  for (BinRule& rule : spec.feature_rules) {
    const int ci = resolve(rule);
    if (rule.kind == BinRule::Kind::AboveMean) {
      if (table.schema[size_t(ci)].type != ColumnSchema::Type::Numeric)
        throw ValidationError("binarize: " + rule.column + " is not numeric");
      if (!rule.threshold)
        rule.threshold = detail::column_mean(table.numeric[size_t(ci)]);
      std::vector<std::uint8_t> col(rows);
      for (size_t r = 0; r < rows; ++r)
        col[r] = table.numeric[size_t(ci)][r] > *rule.threshold ? 1 : 0;
      ds.feature_names.push_back(rule.column);
      feature_cols.push_back(std::move(col));
    } else {
      if (table.schema[size_t(ci)].type != ColumnSchema::Type::Categorical)
        throw ValidationError("binarize: " + rule.column +
                              " is not categorical");
      std::vector<std::vector<std::uint8_t>> hot(
          rule.categories.size(), std::vector<std::uint8_t>(rows, 0));
      for (size_t r = 0; r < rows; ++r) {
        const std::string norm =
            normalize_category(table.text[size_t(ci)][r]);
        const auto it = std::find(rule.categories.begin(),
                                  rule.categories.end(), norm);
        if (it == rule.categories.end())
          throw ValidationError("binarize: unknown category \"" + norm +
                                "\" in column " + rule.column);
        hot[size_t(it - rule.categories.begin())][r] = 1;
      }
      for (size_t k = 0; k < rule.categories.size(); ++k) {
        ds.feature_names.push_back(rule.categories[k]);
        feature_cols.push_back(std::move(hot[k]));
      }
    }
  }

  const int ti = resolve(spec.target_rule);
  if (!spec.target_rule.threshold)
    spec.target_rule.threshold = detail::column_mean(table.numeric[size_t(ti)]);
  ds.labels.resize(rows);
  for (size_t r = 0; r < rows; ++r)
    ds.labels[r] =
        table.numeric[size_t(ti)][r] > *spec.target_rule.threshold ? 1 : 0;

  for (size_t r = 0; r < rows; ++r) {
    Entity e;
    e.id = std::to_string(r);
    e.values.resize(feature_cols.size());
    for (size_t f = 0; f < feature_cols.size(); ++f)
      e.values[f] = feature_cols[f][r];
    ds.entities.push_back(std::move(e));
  }
  return ds;
}

// --- spec persistence --------------------------------------------------------

inline std::string serialize_binarization_spec(const BinarizationSpec& spec) {
  nlohmann::json j;
  auto rule_json = [](const BinRule& r) {
    nlohmann::json jr;
    jr["column"] = r.column;
    jr["kind"] = r.kind == BinRule::Kind::AboveMean ? "above_mean" : "one_hot";
    if (r.threshold) jr["threshold"] = *r.threshold;
    if (!r.categories.empty()) jr["categories"] = r.categories;
    return jr;
  };
  j["features"] = nlohmann::json::array();
  for (const BinRule& r : spec.feature_rules) j["features"].push_back(rule_json(r));
  j["target"] = rule_json(spec.target_rule);
  return j.dump(2) + "\n";
}

inline BinarizationSpec parse_binarization_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed binarization spec: ") +
                          e.what());
  }
  auto rule_from = [](const nlohmann::json& jr) {
    BinRule r;
    r.column = jr.at("column").get<std::string>();
    const std::string kind = jr.at("kind").get<std::string>();
    if (kind == "above_mean")
      r.kind = BinRule::Kind::AboveMean;
    else if (kind == "one_hot")
      r.kind = BinRule::Kind::OneHot;
    else
      throw ValidationError("binarization spec: unknown rule kind " + kind);
    if (jr.contains("threshold")) r.threshold = jr["threshold"].get<double>();
    if (jr.contains("categories"))
      for (const auto& c : jr["categories"])
        r.categories.push_back(c.get<std::string>());
    return r;
  };
  BinarizationSpec spec;
  for (const auto& jr : j.at("features")) spec.feature_rules.push_back(rule_from(jr));
  spec.target_rule = rule_from(j.at("target"));
  return spec;
}

// --- entities CSV --------------------------------------------------------------

inline void export_entities(const BinaryDataset& ds, std::ostream& os) {
  os << "id";
  for (const std::string& name : ds.feature_names) os << "," << name;
  os << ",label\n";
  for (size_t r = 0; r < ds.entities.size(); ++r) {
    os << ds.entities[r].id;
    for (std::uint8_t v : ds.entities[r].values) os << "," << int(v);
    os << "," << ds.labels[r] << "\n";
  }
}

inline BinaryDataset import_entities(
    std::istream& is, const std::vector<std::string>& expected_names = {}) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("entities csv: empty");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header.front() != "id" || header.back() != "label")
    throw ValidationError("entities csv: header must be id,<features>,label");
  BinaryDataset ds;
  ds.feature_names.assign(header.begin() + 1, header.end() - 1);
  if (!expected_names.empty() && ds.feature_names != expected_names)
    throw ValidationError(
        "entities csv: feature names do not match the model/circuit");
  while (std::getline(is, line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw ValidationError("entities csv: wrong field count: " + line);
    Entity e;
    e.id = fields.front();
    for (size_t i = 1; i + 1 < fields.size(); ++i) {
      if (fields[i] == "0")
        e.values.push_back(0);
      else if (fields[i] == "1")
        e.values.push_back(1);
      else
        throw ValidationError("entities csv: feature values must be 0 or 1: " +
                              fields[i]);
    }
    if (fields.back() == "0")
      ds.labels.push_back(0);
    else if (fields.back() == "1")
      ds.labels.push_back(1);
    else
      throw ValidationError("entities csv: labels must be 0 or 1");
    ds.entities.push_back(std::move(e));
  }
  return ds;
}

}  // namespace ddbc
