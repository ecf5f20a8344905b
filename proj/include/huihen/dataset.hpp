// Resolving ingested records into model-ready examples: item vocabularies,
// per-event table lookups, sessionized windows and normalized profiles.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "huihen/embed_field.hpp"
#include "huihen/event_model.hpp"
#include "huihen/sessionizer.hpp"

namespace huihen {

// Item ids seen in training, per product class, plus applied (target) items.
// Row 0 of every table is the shared "unknown" row.
struct Vocabulary {
  std::vector<std::map<std::string, std::uint32_t>> items;
  std::map<std::string, std::uint32_t> targets;

  static Vocabulary build(const Taxonomy& taxonomy,
                          const std::map<std::string, std::vector<BehaviorEvent>>& events,
                          std::span<const ProfileRecord> profiles) {
    Vocabulary v;
    v.items.resize(taxonomy.product_classes().size());
    std::vector<std::map<std::string, bool>> seen(v.items.size());
    for (const auto& [user, list] : events)
      for (const auto& ev : list) {
        const auto& k = taxonomy.kind(ev.kind);
        if (k.category == Category::kItemClick && ev.item_id)
          seen[static_cast<std::size_t>(k.product_class)][*ev.item_id] = true;
      }
    for (std::size_t c = 0; c < seen.size(); ++c) {
      std::uint32_t next = 1;
      for (const auto& [id, unused] : seen[c]) v.items[c][id] = next++;
    }
    std::map<std::string, bool> target_seen;
    for (const auto& p : profiles) target_seen[p.applied_item_id] = true;
    std::uint32_t next = 1;
    for (const auto& [id, unused] : target_seen) v.targets[id] = next++;
    return v;
  }

  std::size_t item_rows(std::size_t product_class) const { return items.at(product_class).size() + 1; }
  std::size_t target_rows() const { return targets.size() + 1; }

  std::uint32_t item_row(std::size_t product_class, const std::string& id) const {
    const auto& m = items.at(product_class);
    auto it = m.find(id);
    return it == m.end() ? 0 : it->second;
  }

  std::uint32_t target_row(const std::string& id) const {
    auto it = targets.find(id);
    return it == targets.end() ? 0 : it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["items"] = nlohmann::json::array();
    for (const auto& m : items) {
      nlohmann::json ids = nlohmann::json::array();
      for (const auto& [id, row] : m) ids.push_back(id);
      j["items"].push_back(ids);
    }
    nlohmann::json t = nlohmann::json::array();
    for (const auto& [id, row] : targets) t.push_back(id);
    j["targets"] = t;
    return j;
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    Vocabulary v;
    for (const auto& ids : j.at("items")) {
      std::map<std::string, std::uint32_t> m;
      std::uint32_t next = 1;
      for (const auto& id : ids) m[id.get<std::string>()] = next++;
      v.items.push_back(std::move(m));
    }
    std::uint32_t next = 1;
    for (const auto& id : j.at("targets")) v.targets[id.get<std::string>()] = next++;
    return v;
  }
};

struct Example {
  std::string user_id;
  std::vector<double> profile;                     // normalized
  std::vector<std::vector<EncodedEvent>> sessions;  // oldest -> newest, real events only
  std::vector<EncodedEvent> flat;                   // flat-sequence variant input
  std::uint32_t target_row = 0;
  int label = -1;  // -1 = unlabeled
  double teacher_q = std::numeric_limits<double>::quiet_NaN();
};

struct EncodeOptions {
  SessionConfig session;
  AmountTransform amount = AmountTransform::kLog;
  bool sessions = true;  // false: flat sequence of the newest flat_max_events events
  std::size_t flat_max_events = 250;
};

inline EncodedEvent encode_event(const BehaviorEvent& ev, const Taxonomy& taxonomy,
                                 const Vocabulary& vocab, AmountTransform amount, double dt) {
  EncodedEvent out;
  const auto& k = taxonomy.kind(ev.kind);
  switch (k.category) {
    case Category::kItemClick:
      out.kind = EncodedEvent::Kind::kItemClick;
      out.table = static_cast<std::uint16_t>(k.product_class);
      out.field = static_cast<std::uint16_t>(k.product_class);
      out.row = ev.item_id ? vocab.item_row(static_cast<std::size_t>(k.product_class), *ev.item_id) : 0;
      break;
    case Category::kTransformOp:
      out.kind = EncodedEvent::Kind::kTransformOp;
      out.field = static_cast<std::uint16_t>(taxonomy.transform_field());
      out.row = static_cast<std::uint32_t>(k.row);
      out.scale = amount_scale(ev.amount.value_or(0.0), amount);
      break;
    case Category::kFunctionWidget:
      out.kind = EncodedEvent::Kind::kFunctionWidget;
      out.field = static_cast<std::uint16_t>(taxonomy.widget_field());
      out.row = static_cast<std::uint32_t>(k.row);
      break;
  }
  out.week = static_cast<std::uint8_t>(ev.week_day - 1);
  out.month = static_cast<std::uint8_t>(ev.month_day - 1);
  out.dt = dt;
  return out;
}

inline Example encode_example(const ProfileRecord& rec, std::span<const BehaviorEvent> events,
                              const Taxonomy& taxonomy, const Vocabulary& vocab,
                              const NormalizationStats& norm, const EncodeOptions& opts) {
  Example ex;
  ex.user_id = rec.user_id;
  ex.profile = norm.apply(rec.features);
  ex.target_row = vocab.target_row(rec.applied_item_id);
  ex.label = rec.label ? *rec.label : -1;
  if (opts.sessions) {
    const SessionWindow w = sessionize(events, rec.loan_ts, opts.session);
    ex.sessions.reserve(w.sessions.size());
    for (const auto& s : w.sessions) {
      std::vector<EncodedEvent> enc;
      enc.reserve(s.events.size());
      for (std::size_t k = 0; k < s.events.size(); ++k)
        enc.push_back(encode_event(s.events[k], taxonomy, vocab, opts.amount,
                                   static_cast<double>(s.dt(k))));
      ex.sessions.push_back(std::move(enc));
    }
  } else {
    std::size_t end = 0;
    while (end < events.size() && events[end].ts <= rec.loan_ts) ++end;
    const std::size_t begin = end > opts.flat_max_events ? end - opts.flat_max_events : 0;
    for (std::size_t k = begin; k < end; ++k) {
      const double dt = k == begin ? 0.0 : static_cast<double>(events[k].ts - events[k - 1].ts);
      ex.flat.push_back(encode_event(events[k], taxonomy, vocab, opts.amount, dt));
    }
  }
  return ex;
}

// Profile-only example (pretraining on old data).
inline Example encode_profile_example(const ProfileRecord& rec, const NormalizationStats& norm) {
  Example ex;
  ex.user_id = rec.user_id;
  ex.profile = norm.apply(rec.features);
  ex.label = rec.label ? *rec.label : -1;
  return ex;
}

}  // namespace huihen
