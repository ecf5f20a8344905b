// Behavior taxonomy, raw record ingestion, and calendar tagging.
//
// Raw operation codes are merged into a small set of behavior kinds by a
// taxonomy file (`raw_code,kind,product_class_or_op_class`). Each kind belongs
// to one of three categories; item clicks are further split into one field per
// product class, transform operations and function widgets each form one
// field, and time periods form the last field.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "huihen/common.hpp"

namespace huihen {

enum class Category : std::uint8_t { kItemClick, kTransformOp, kFunctionWidget };

inline const char* category_name(Category c) {
  switch (c) {
    case Category::kItemClick:
      return "item_click";
    case Category::kTransformOp:
      return "transform_op";
    case Category::kFunctionWidget:
      return "function_widget";
  }
  return "?";
}

inline std::optional<Category> parse_category(std::string_view s) {
  if (s == "item_click") return Category::kItemClick;
  if (s == "transform_op") return Category::kTransformOp;
  if (s == "function_widget") return Category::kFunctionWidget;
  return std::nullopt;
}

struct TaxonomyRow {
  std::string raw_code;
  Category category = Category::kFunctionWidget;
  // Product class for item clicks, operation class for transform ops.
  std::string group;
};

struct KindInfo {
  Category category = Category::kFunctionWidget;
  std::string label;
  std::string group;
  // Item clicks: index of the product class. Others: unused (-1).
  int product_class = -1;
  // Row in the transform-op or widget embedding table; -1 for item clicks.
  int row = -1;
};

inline std::vector<TaxonomyRow> read_taxonomy(std::istream& in) {
  std::vector<TaxonomyRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto cols = split(text, ',');
    if (cols.size() != 3)
      throw ParseError("taxonomy line " + std::to_string(line_no) + ": expected 3 columns");
    if (line_no == 1 && trim(cols[0]) == "raw_code") continue;
    auto cat = parse_category(trim(cols[1]));
    if (!cat)
      throw ParseError("taxonomy line " + std::to_string(line_no) + ": unknown kind '" +
                       std::string(trim(cols[1])) + "'");
    rows.push_back({std::string(trim(cols[0])), *cat, std::string(trim(cols[2]))});
  }
  return rows;
}

inline std::vector<TaxonomyRow> read_taxonomy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open taxonomy file '" + path + "'");
  return read_taxonomy(in);
}

inline void write_taxonomy(std::ostream& out, const std::vector<TaxonomyRow>& rows) {
  out << "raw_code,kind,product_class_or_op_class\n";
  for (const auto& r : rows)
    out << r.raw_code << ',' << category_name(r.category) << ',' << r.group << '\n';
}

class Taxonomy {
 public:
  Taxonomy() = default;

  // With merging, codes sharing (category, group) collapse into one kind;
  // without it every raw code is its own kind. Item-click product classes
  // (and therefore fields) are the same either way.
  static Taxonomy build(const std::vector<TaxonomyRow>& rows, bool merge_enabled) {
    Taxonomy t;
    t.merge_enabled_ = merge_enabled;
    std::map<std::string, int> by_label;
    for (const auto& r : rows) {
      if (t.code_to_kind_.count(r.raw_code))
        throw ParseError("taxonomy: duplicate raw code '" + r.raw_code + "'");
      std::string label = merge_enabled
                              ? std::string(category_name(r.category)) + ":" + r.group
                              : r.raw_code;
      auto it = by_label.find(label);
      int kind_id;
      if (it == by_label.end()) {
        KindInfo k;
        k.category = r.category;
        k.label = label;
        k.group = r.group;
        if (r.category == Category::kItemClick) {
          k.product_class = t.product_class_index(r.group, true);
        } else if (r.category == Category::kTransformOp) {
          k.row = t.op_rows_++;
        } else {
          k.row = t.widget_rows_++;
        }
        kind_id = static_cast<int>(t.kinds_.size());
        t.kinds_.push_back(std::move(k));
        by_label.emplace(label, kind_id);
      } else {
        kind_id = it->second;
        if (t.kinds_[static_cast<std::size_t>(kind_id)].category != r.category)
          throw ParseError("taxonomy: kind '" + label + "' has mixed categories");
      }
      t.code_to_kind_.emplace(r.raw_code, kind_id);
    }
    for (std::size_t k = 0; k < t.kinds_.size(); ++k) {
      if (merge_enabled && t.kinds_[k].category == Category::kFunctionWidget) {
        t.fallback_widget_ = static_cast<int>(k);
        break;
      }
    }
    if (t.fallback_widget_ < 0) {
      KindInfo k;
      k.category = Category::kFunctionWidget;
      k.label = "function_widget:__unknown__";
      k.group = "__unknown__";
      k.row = t.widget_rows_++;
      t.fallback_widget_ = static_cast<int>(t.kinds_.size());
      t.kinds_.push_back(std::move(k));
    }
    return t;
  }

  std::optional<int> lookup(const std::string& raw_code) const {
    auto it = code_to_kind_.find(raw_code);
    if (it == code_to_kind_.end()) return std::nullopt;
    return it->second;
  }

  // Kind used for codes missing from the table in non-strict ingestion.
  int fallback_widget() const { return fallback_widget_; }

  const std::vector<KindInfo>& kinds() const { return kinds_; }
  const KindInfo& kind(int id) const { return kinds_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& product_classes() const { return product_classes_; }

  std::size_t raw_code_count() const { return code_to_kind_.size(); }
  // Kinds reachable from raw codes (excludes the reserved fallback widget).
  std::size_t merged_kind_count() const {
    std::vector<bool> used(kinds_.size(), false);
    for (const auto& [code, id] : code_to_kind_) used[static_cast<std::size_t>(id)] = true;
    return static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
  }

  int op_rows() const { return op_rows_; }
  int widget_rows() const { return widget_rows_; }
  bool merge_enabled() const { return merge_enabled_; }

  // Field layout: [product classes..., transform op, widget, time period].
  int field_count() const { return static_cast<int>(product_classes_.size()) + 3; }
  int transform_field() const { return static_cast<int>(product_classes_.size()); }
  int widget_field() const { return transform_field() + 1; }
  int time_field() const { return transform_field() + 2; }

  int field_of(int kind_id) const {
    const auto& k = kind(kind_id);
    switch (k.category) {
      case Category::kItemClick:
        return k.product_class;
      case Category::kTransformOp:
        return transform_field();
      case Category::kFunctionWidget:
        return widget_field();
    }
    return widget_field();
  }

  // One row per kind keyed by its own label; building from it reproduces the
  // same kinds, so merging is idempotent.
  std::vector<TaxonomyRow> merged_rows() const {
    std::vector<TaxonomyRow> rows;
    for (std::size_t k = 0; k < kinds_.size(); ++k) {
      if (static_cast<int>(k) == fallback_widget_ && kinds_[k].group == "__unknown__") continue;
      rows.push_back({kinds_[k].label, kinds_[k].category, kinds_[k].group});
    }
    return rows;
  }

  // Stable identity used to check checkpoints against the taxonomy in use.
  std::string signature() const {
    std::string s = merge_enabled_ ? "merged;" : "raw;";
    for (const auto& k : kinds_) s += k.label + ";";
    return hex64(fnv1a(s));
  }

 private:
  int product_class_index(const std::string& name, bool create) {
    for (std::size_t i = 0; i < product_classes_.size(); ++i)
      if (product_classes_[i] == name) return static_cast<int>(i);
    if (!create) return -1;
    product_classes_.push_back(name);
    return static_cast<int>(product_classes_.size() - 1);
  }

  bool merge_enabled_ = true;
  std::vector<KindInfo> kinds_;
  std::vector<std::string> product_classes_;
  std::unordered_map<std::string, int> code_to_kind_;
  int op_rows_ = 0;
  int widget_rows_ = 0;
  int fallback_widget_ = -1;
};

// ------------------------------------------------------------------ calendar

struct TimePeriod {
  int week_day = 1;   // Monday = 1 .. Sunday = 7
  int month_day = 1;  // 1 .. 31
  friend bool operator==(const TimePeriod&, const TimePeriod&) = default;
};

// Days since 1970-01-01 to civil day-of-month (proleptic Gregorian).
inline int day_of_month_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  return static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
}

inline TimePeriod derive_time_period(std::int64_t ts, int tz_offset_minutes) {
  const std::int64_t local = ts + static_cast<std::int64_t>(tz_offset_minutes) * 60;
  std::int64_t days = local / 86400;
  if (local % 86400 < 0) --days;
  // 1970-01-01 was a Thursday (4).
  const std::int64_t wd = ((days % 7) + 7 + 3) % 7 + 1;
  return {static_cast<int>(wd), day_of_month_from_days(days)};
}

// -------------------------------------------------------------------- events

struct BehaviorEvent {
  std::string user_id;
  std::int64_t ts = 0;
  int kind = -1;
  std::optional<std::string> item_id;
  std::optional<double> amount;
  int week_day = 1;
  int month_day = 1;
};

struct EventIngestOptions {
  bool strict = false;
  int tz_offset_minutes = 0;
};

struct EventIngestResult {
  std::map<std::string, std::vector<BehaviorEvent>> by_user;
  std::size_t lines = 0;
  std::size_t events = 0;
  std::size_t malformed = 0;
  std::size_t unknown_codes = 0;
  std::vector<std::size_t> malformed_lines;
};

namespace detail {

inline bool parse_event_line(const std::string& line, const Taxonomy& taxonomy,
                             const EventIngestOptions& opts, std::size_t line_no,
                             BehaviorEvent& ev, bool& unknown) {
  unknown = false;
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  auto uid = j.find("user_id");
  auto ts = j.find("ts");
  auto code = j.find("code");
  if (uid == j.end() || !uid->is_string()) return false;
  if (ts == j.end() || !ts->is_number_integer()) return false;
  if (code == j.end() || !code->is_string()) return false;
  const std::int64_t t = ts->get<std::int64_t>();
  if (t < 0) return false;

  ev = BehaviorEvent{};
  ev.user_id = uid->get<std::string>();
  ev.ts = t;
  const auto raw = code->get<std::string>();
  auto kind = taxonomy.lookup(raw);
  if (!kind) {
    if (opts.strict)
      throw ParseError("events line " + std::to_string(line_no) + ": unknown code '" + raw + "'");
    unknown = true;
    ev.kind = taxonomy.fallback_widget();
  } else {
    ev.kind = *kind;
  }

  auto item = j.find("item_id");
  auto amount = j.find("amount");
  const bool has_item = item != j.end() && !item->is_null();
  const bool has_amount = amount != j.end() && !amount->is_null();
  const Category cat = taxonomy.kind(ev.kind).category;
  if (!unknown) {
    if ((cat == Category::kItemClick) != has_item) return false;
    if ((cat == Category::kTransformOp) != has_amount) return false;
    if (has_item) {
      if (!item->is_string()) return false;
      ev.item_id = item->get<std::string>();
    }
    if (has_amount) {
      if (!amount->is_number()) return false;
      const double a = amount->get<double>();
      if (!(a > 0.0) || !std::isfinite(a)) return false;
      ev.amount = a;
    }
  }
  const TimePeriod tp = derive_time_period(ev.ts, opts.tz_offset_minutes);
  ev.week_day = tp.week_day;
  ev.month_day = tp.month_day;
  return true;
}

}  // namespace detail

// Line-delimited JSON events -> per-user, time-sorted lists.
inline EventIngestResult ingest_events(std::istream& in, const Taxonomy& taxonomy,
                                       const EventIngestOptions& opts = {}) {
  EventIngestResult result;
  std::string line;
  while (std::getline(in, line)) {
    ++result.lines;
    if (trim(line).empty()) continue;
    BehaviorEvent ev;
    bool unknown = false;
    if (!detail::parse_event_line(line, taxonomy, opts, result.lines, ev, unknown)) {
      ++result.malformed;
      if (result.malformed_lines.size() < 32) result.malformed_lines.push_back(result.lines);
      continue;
    }
    if (unknown) ++result.unknown_codes;
    ++result.events;
    result.by_user[ev.user_id].push_back(std::move(ev));
  }
  for (auto& [user, events] : result.by_user)
    std::stable_sort(events.begin(), events.end(),
                     [](const BehaviorEvent& a, const BehaviorEvent& b) { return a.ts < b.ts; });
  return result;
}

inline EventIngestResult ingest_events_file(const std::string& path, const Taxonomy& taxonomy,
                                            const EventIngestOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open events file '" + path + "'");
  return ingest_events(in, taxonomy, opts);
}

// ------------------------------------------------------------------ profiles

struct FeatureSchema {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }

  static FeatureSchema with_dim(std::size_t p) {
    FeatureSchema s;
    for (std::size_t i = 1; i <= p; ++i) s.names.push_back("f" + std::to_string(i));
    return s;
  }

  std::string header() const {
    std::string h = "user_id";
    for (const auto& n : names) h += "," + n;
    return h + ",applied_item_id,loan_ts,label";
  }
};

enum class LabelPolarity { kOverdueIsOne, kNormalIsOne };

struct ProfileRecord {
  std::string user_id;
  std::vector<double> features;
  std::string applied_item_id;
  std::int64_t loan_ts = 0;
  // 1 = overdue after polarity mapping; nullopt = unlabeled.
  std::optional<int> label;
};

struct ProfileTable {
  FeatureSchema schema;
  std::vector<ProfileRecord> records;
};

// When `schema` is empty the feature columns are taken from the header.
inline ProfileTable ingest_profiles(std::istream& in, const FeatureSchema& schema = {},
                                    LabelPolarity polarity = LabelPolarity::kOverdueIsOne) {
  ProfileTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("profiles: missing header");
  const auto header = split(trim(line), ',');
  if (header.size() < 4 || trim(header[0]) != "user_id" ||
      trim(header[header.size() - 3]) != "applied_item_id" ||
      trim(header[header.size() - 2]) != "loan_ts" || trim(header.back()) != "label")
    throw ParseError("profiles: header must be user_id,<features...>,applied_item_id,loan_ts,label");
  FeatureSchema found;
  for (std::size_t i = 1; i + 3 < header.size(); ++i) found.names.emplace_back(trim(header[i]));
  if (!schema.names.empty() && schema.names != found.names)
    throw ParseError("profiles: header does not match schema (expected " +
                     std::to_string(schema.size()) + " features: " + schema.header() + ")");
  table.schema = schema.names.empty() ? found : schema;
  const std::size_t p = table.schema.size();

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cols = split(trim(line), ',');
    if (cols.size() != p + 4) {
      const std::size_t got = cols.size() >= 4 ? cols.size() - 4 : 0;
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(p) +
                       " features, got " + std::to_string(got));
    }
    ProfileRecord rec;
    rec.user_id = std::string(trim(cols[0]));
    rec.features.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
      if (!parse_double(trim(cols[1 + i]), rec.features[i]) || !std::isfinite(rec.features[i]))
        throw ParseError("row " + std::to_string(row) + ": feature " + table.schema.names[i] +
                         " is not a finite number");
    }
    rec.applied_item_id = std::string(trim(cols[p + 1]));
    if (!parse_int64(trim(cols[p + 2]), rec.loan_ts) || rec.loan_ts < 0)
      throw ParseError("row " + std::to_string(row) + ": loan_ts must be a non-negative integer");
    const auto label = trim(cols[p + 3]);
    if (label == "0" || label == "1") {
      int y = label == "1" ? 1 : 0;
      if (polarity == LabelPolarity::kNormalIsOne) y = 1 - y;
      rec.label = y;
    } else if (!label.empty()) {
      throw ParseError("row " + std::to_string(row) + ": label must be 0, 1 or empty");
    }
    table.records.push_back(std::move(rec));
  }
  return table;
}

inline ProfileTable ingest_profiles_file(const std::string& path, const FeatureSchema& schema = {},
                                         LabelPolarity polarity = LabelPolarity::kOverdueIsOne) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open profiles file '" + path + "'");
  return ingest_profiles(in, schema, polarity);
}

}  // namespace huihen
