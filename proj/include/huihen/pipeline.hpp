// Config-driven stages: typed settings, data loading, pretraining, full
// training, evaluation and the ablation matrix.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "huihen/config.hpp"
#include "huihen/dataset.hpp"
#include "huihen/network.hpp"
#include "huihen/synthgen.hpp"
#include "huihen/teacher.hpp"
#include "huihen/trainer.hpp"

namespace huihen {

// ------------------------------------------------------------------ settings

namespace detail {

inline std::size_t positive(const Config& c, const std::string& key) {
  const auto v = c.get_int(key);
  if (v <= 0) throw ConfigError("config key '" + key + "': must be positive, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

inline std::size_t non_negative(const Config& c, const std::string& key) {
  const auto v = c.get_int(key);
  if (v < 0) throw ConfigError("config key '" + key + "': must be non-negative, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

inline double in_range(const Config& c, const std::string& key, double lo, double hi, bool open_lo = false) {
  const double v = c.get_double(key);
  if (!(open_lo ? v > lo : v >= lo) || !(v <= hi))
    throw ConfigError("config key '" + key + "': " + format_double(v) + " is outside " + (open_lo ? "(" : "[") +
                      format_double(lo) + ", " + format_double(hi) + "]");
  return v;
}

inline std::string one_of(const Config& c, const std::string& key, std::initializer_list<const char*> allowed) {
  const auto v = c.get_string(key);
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return v;
    list += (list.empty() ? "" : "|") + std::string(a);
  }
  throw ConfigError("config key '" + key + "': expected " + list + ", got '" + v + "'");
}

}  // namespace detail

inline SessionConfig session_config(const Config& c) {
  SessionConfig s;
  s.gap_seconds = static_cast<std::int64_t>(detail::non_negative(c, "session.gap_seconds"));
  s.min_events = detail::positive(c, "session.min_events");
  s.max_sessions = detail::positive(c, "session.max_sessions");
  s.max_events = detail::positive(c, "session.max_events");
  return s;
}

inline EventIngestOptions ingest_options(const Config& c) {
  EventIngestOptions o;
  o.strict = c.get_bool("data.strict_codes");
  o.tz_offset_minutes = static_cast<int>(c.get_int("data.tz_offset_minutes"));
  if (o.tz_offset_minutes < -1440 || o.tz_offset_minutes > 1440)
    throw ConfigError("config key 'data.tz_offset_minutes': must be within +-1440");
  return o;
}

inline LabelPolarity label_polarity(const Config& c) {
  return detail::one_of(c, "data.positive_label_means", {"overdue", "normal"}) == "overdue"
             ? LabelPolarity::kOverdueIsOne
             : LabelPolarity::kNormalIsOne;
}

// Keep probability, whichever way the raw number is expressed.
inline double dropout_keep(const Config& c) {
  const double raw = detail::in_range(c, "mlp.dropout", 0.0, 1.0);
  const bool keep = detail::one_of(c, "dropout.semantics", {"keep", "drop"}) == "keep";
  const double k = keep ? raw : 1.0 - raw;
  if (!(k > 0.0)) throw ConfigError("config key 'mlp.dropout': keep probability must be positive");
  return k;
}

inline ModelSpec model_spec(const Config& c, std::size_t profile_dim) {
  ModelSpec s;
  s.embed_dim = detail::positive(c, "embed.dim");
  s.time_dim = detail::positive(c, "embed.time_dim");
  s.hidden = detail::positive(c, "gru.hidden");
  s.profile_dim = profile_dim;
  s.mlp_widths.clear();
  for (auto w : c.get_int_list("mlp.widths")) {
    if (w <= 0) throw ConfigError("config key 'mlp.widths': widths must be positive");
    s.mlp_widths.push_back(static_cast<std::size_t>(w));
  }
  if (s.mlp_widths.empty() || s.mlp_widths.back() != 2)
    throw ConfigError("config key 'mlp.widths': last layer must have width 2");
  s.use_bias = c.get_bool("fan.use_bias");
  s.field_aware = c.get_bool("fan.enabled");
  s.time_aware = c.get_bool("gru.time_aware");
  s.user_item_aware = c.get_bool("gru.user_item_aware");
  s.sessions = c.get_bool("model.sessions");
  s.flat_max_events = detail::positive(c, "model.flat_max_events");
  s.prelu_init = c.get_double("prelu.init");
  s.alpha_init = detail::in_range(c, "loss.alpha_init", 0.0, 1e6, true);
  s.q_init = detail::in_range(c, "gru.q_init", 0.0, 1e3);
  s.clamp_eps = detail::in_range(c, "loss.clamp_epsilon", 0.0, 0.5, true);
  s.amount = detail::one_of(c, "embed.amount_transform", {"log", "log1p"}) == "log" ? AmountTransform::kLog
                                                                                       : AmountTransform::kLog1p;
  s.session = session_config(c);
  return s;
}

inline bool guidance_enabled(const Config& c) {
  return detail::one_of(c, "loss.mode", {"plain_ce", "ce_plus_symkl"}) == "ce_plus_symkl" &&
         c.get_bool("train.teacher_guidance");
}

inline TrainOptions train_options(const Config& c, bool pretrain) {
  TrainOptions o;
  o.adam.learning_rate = detail::in_range(c, "train.learning_rate", 0.0, 10.0);
  o.adam.beta1 = detail::in_range(c, "train.beta1", 0.0, 1.0);
  o.adam.beta2 = detail::in_range(c, "train.beta2", 0.0, 1.0);
  o.adam.epsilon = detail::in_range(c, "train.adam_epsilon", 0.0, 1.0, true);
  o.batch_size = detail::positive(c, "train.batch_size");
  o.epochs = detail::non_negative(c, pretrain ? "pretrain.epochs" : "train.epochs");
  o.seed = static_cast<std::uint64_t>(c.get_int("train.seed"));
  o.clip_norm = c.get_double("train.clip_norm");
  o.strict = c.get_bool("train.strict");
  o.class_weight = detail::in_range(c, "train.class_weight", 0.0, 1e6, true);
  o.dropout_keep = dropout_keep(c);
  o.freeze_upi = !pretrain && c.get_bool("upi.freeze");
  o.loss = pretrain && guidance_enabled(c) ? LossMode::kCePlusSymKl : LossMode::kPlainCe;
  o.profile_only = pretrain;
  return o;
}

inline TeacherConfig teacher_config(const Config& c) {
  TeacherConfig t;
  t.l2 = detail::in_range(c, "teacher.l2", 0.0, 1e6);
  t.max_iters = detail::positive(c, "teacher.max_iters");
  t.tolerance = detail::in_range(c, "teacher.tolerance", 0.0, 1.0, true);
  t.norm_epsilon = detail::in_range(c, "norm.epsilon", 0.0, 1.0, true);
  return t;
}

inline ScenarioConfig scenario_config(const Config& c) {
  ScenarioConfig s;
  s.seed = static_cast<std::uint64_t>(c.get_int("synth.seed"));
  s.n_users = detail::positive(c, "synth.n_users");
  s.n_test = detail::non_negative(c, "synth.n_test");
  s.n_old = detail::non_negative(c, "synth.n_old");
  s.base_rate = detail::in_range(c, "synth.base_rate", 0.0, 1.0, true);
  s.brevity = c.get_double("synth.brevity");
  s.habit = c.get_double("synth.habit");
  s.periodicity = c.get_double("synth.periodicity");
  s.profile = c.get_double("synth.profile");
  s.noise = detail::in_range(c, "synth.noise", 0.0, 1e3);
  s.old_label_flip = detail::in_range(c, "synth.old_label_flip", 0.0, 1.0);
  s.profile_dim = detail::positive(c, "synth.profile_dim");
  s.items_per_class = detail::positive(c, "synth.items_per_class");
  s.target_items = detail::positive(c, "synth.target_items");
  s.taxonomy = detail::one_of(c, "synth.taxonomy", {"bank_a", "bank_b"});
  return s;
}

inline std::size_t precision_bits(const Config& c) {
  const auto p = c.get_int("train.precision");
  if (p != 32 && p != 64) throw ConfigError("config key 'train.precision': expected 32 or 64");
  return static_cast<std::size_t>(p);
}

// ---------------------------------------------------------------------- data

struct BehaviorData {
  Taxonomy taxonomy;
  std::string taxonomy_csv;  // canonical text, embedded in checkpoints
  ProfileTable profiles;
  EventIngestResult events;
};

inline Taxonomy taxonomy_from_text(const std::string& csv, bool merge_enabled, std::string* canonical = nullptr) {
  std::istringstream in(csv);
  const auto rows = read_taxonomy(in);
  if (canonical) {
    std::ostringstream out;
    write_taxonomy(out, rows);
    *canonical = out.str();
  }
  return Taxonomy::build(rows, merge_enabled);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline BehaviorData load_behavior_data(const Config& c, const std::string& taxonomy_path,
                                       const std::string& profiles_path, const std::string& events_path) {
  BehaviorData d;
  d.taxonomy = taxonomy_from_text(read_text_file(taxonomy_path), c.get_bool("data.merge_enabled"), &d.taxonomy_csv);
  d.profiles = ingest_profiles_file(profiles_path, {}, label_polarity(c));
  if (!events_path.empty()) d.events = ingest_events_file(events_path, d.taxonomy, ingest_options(c));
  return d;
}

inline std::vector<int> labels_of(std::span<const ProfileRecord> records) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.label ? *r.label : -1);
  return y;
}

inline std::vector<ProfileRecord> labeled_only(std::span<const ProfileRecord> records) {
  std::vector<ProfileRecord> out;
  for (const auto& r : records)
    if (r.label) out.push_back(r);
  return out;
}

template <class T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

// --------------------------------------------------------------- pretraining

using EpochHook = std::function<void(const EpochMetrics&)>;

template <class Real>
struct TrainRun {
  Model<Real> model;
  std::vector<EpochMetrics> metrics;
  std::vector<double> step_losses;
  EvalResult val;
};

// `teacher` supplies guidance probabilities by user id; when null and
// guidance is on, the built-in logistic teacher is fit on the training split.
template <class Real>
TrainRun<Real> pretrain(const Config& c, std::span<const ProfileRecord> old_data,
                        const std::map<std::string, double>* teacher = nullptr, const EpochHook& on_epoch = {}) {
  const auto records = labeled_only(old_data);
  if (records.empty()) throw Error("pretrain: no labeled records");
  const std::size_t p = records.front().features.size();
  const auto opts = train_options(c, true);
  const auto split = stratified_split(labels_of(records), c.get_double("train.val_fraction"), opts.seed);
  const auto train_rec = gather<ProfileRecord>(records, split.train);
  const auto val_rec = gather<ProfileRecord>(records, split.val);

  TrainRun<Real> run{Model<Real>(model_spec(c, p).profile_only(), opts.seed), {}, {}, {}};
  std::vector<std::vector<double>> rows;
  for (const auto& r : train_rec) rows.push_back(r.features);
  run.model.norm() = NormalizationStats::fit(rows, c.get_double("norm.epsilon"));

  std::map<std::string, double> builtin;
  std::string teacher_source = "off";
  if (opts.loss == LossMode::kCePlusSymKl) {
    if (!teacher) {
      for (const auto& t : builtin_teacher(train_rec, teacher_config(c))) builtin[t.user_id] = t.probability;
      teacher = &builtin;
      teacher_source = "builtin";
    } else {
      teacher_source = "file";
    }
  }
  auto encode = [&](const std::vector<ProfileRecord>& rs, bool need_q) {
    std::vector<Example> out;
    out.reserve(rs.size());
    for (const auto& r : rs) {
      out.push_back(encode_profile_example(r, run.model.norm()));
      if (need_q) {
        auto it = teacher->find(r.user_id);
        if (it == teacher->end()) throw Error("pretrain: teacher has no probability for user " + r.user_id);
        out.back().teacher_q = it->second;
      }
    }
    return out;
  };
  const auto train_ex = encode(train_rec, opts.loss == LossMode::kCePlusSymKl);
  const auto val_ex = encode(val_rec, false);

  Trainer<Real> trainer(run.model, opts);
  trainer.on_epoch = on_epoch;
  run.metrics = trainer.fit(train_ex, val_ex);
  run.step_losses = trainer.step_losses();
  run.val = trainer.evaluate(val_ex);
  run.model.meta()["teacher"] = teacher_source;
  run.model.meta()["train.seed"] = std::to_string(opts.seed);
  return run;
}

// ------------------------------------------------------------- full training

template <class Real>
std::vector<Example> encode_for_model(const Model<Real>& model, const Taxonomy& taxonomy,
                                      std::span<const ProfileRecord> records, const EventIngestResult& events) {
  std::vector<Example> out;
  out.reserve(records.size());
  static const std::vector<BehaviorEvent> kNone;
  for (const auto& r : records) {
    if (!model.spec().with_sequence) {
      out.push_back(encode_profile_example(r, model.norm()));
      continue;
    }
    auto it = events.by_user.find(r.user_id);
    const auto& list = it == events.by_user.end() ? kNone : it->second;
    out.push_back(encode_example(r, list, taxonomy, model.vocab(), model.norm(), model.spec().encode_options()));
  }
  return out;
}

template <class Real>
TrainRun<Real> train_full(const Config& c, const BehaviorData& data, const Checkpoint* init = nullptr,
                          const EpochHook& on_epoch = {}) {
  const auto records = labeled_only(data.profiles.records);
  if (records.empty()) throw Error("train: no labeled records");
  const auto opts = train_options(c, false);
  const auto split = stratified_split(labels_of(records), c.get_double("train.val_fraction"), opts.seed);
  const auto train_rec = gather<ProfileRecord>(records, split.train);
  const auto val_rec = gather<ProfileRecord>(records, split.val);

  std::map<std::string, std::vector<BehaviorEvent>> train_events;
  for (const auto& r : train_rec) {
    auto it = data.events.by_user.find(r.user_id);
    if (it != data.events.by_user.end()) train_events.emplace(r.user_id, it->second);
  }
  const Vocabulary vocab = Vocabulary::build(data.taxonomy, train_events, train_rec);
  ModelSpec spec = model_spec(c, data.profiles.schema.size());
  spec.set_vocabulary(data.taxonomy, vocab);

  TrainRun<Real> run{Model<Real>(spec, opts.seed), {}, {}, {}};
  run.model.vocab() = vocab;
  const bool use_init = init && c.get_bool("train.aux_pretrain");
  if (use_init) {
    run.model.adopt_pretrained(*init);
  } else {
    std::vector<std::vector<double>> rows;
    for (const auto& r : train_rec) rows.push_back(r.features);
    run.model.norm() = NormalizationStats::fit(rows, c.get_double("norm.epsilon"));
  }
  auto& meta = run.model.meta();
  meta["taxonomy.csv"] = data.taxonomy_csv;
  meta["taxonomy.merge_enabled"] = data.taxonomy.merge_enabled() ? "true" : "false";
  meta["taxonomy.signature"] = data.taxonomy.signature();
  meta["data.tz_offset_minutes"] = std::to_string(c.get_int("data.tz_offset_minutes"));
  meta["train.seed"] = std::to_string(opts.seed);
  meta["upi.init"] = use_init ? "pretrain" : "random";

  const auto train_ex = encode_for_model(run.model, data.taxonomy, train_rec, data.events);
  const auto val_ex = encode_for_model(run.model, data.taxonomy, val_rec, data.events);
  Trainer<Real> trainer(run.model, opts);
  trainer.on_epoch = on_epoch;
  run.metrics = trainer.fit(train_ex, val_ex);
  run.step_losses = trainer.step_losses();
  run.val = trainer.evaluate(val_ex);
  return run;
}

// Taxonomy a full checkpoint was trained with.
inline Taxonomy checkpoint_taxonomy(const Checkpoint& ck) {
  const auto csv = ck.meta_or("taxonomy.csv");
  if (csv.empty()) throw Error("checkpoint has no embedded taxonomy");
  Taxonomy t = taxonomy_from_text(csv, ck.meta_or("taxonomy.merge_enabled", "true") == "true");
  if (t.signature() != ck.meta_or("taxonomy.signature"))
    throw Error("checkpoint taxonomy signature mismatch");
  return t;
}

// Scores `records` (labeled or not) with a trained model.
template <class Real>
EvalResult evaluate_records(const Model<Real>& model, const Checkpoint& ck, std::span<const ProfileRecord> records,
                            const std::string& events_path, const Config& c) {
  std::vector<Example> ex;
  if (model.spec().with_sequence) {
    const Taxonomy tax = checkpoint_taxonomy(ck);
    EventIngestOptions io = ingest_options(c);
    std::int64_t tz = io.tz_offset_minutes;
    if (parse_int64(ck.meta_or("data.tz_offset_minutes", "0"), tz)) io.tz_offset_minutes = static_cast<int>(tz);
    EventIngestResult events;
    if (!events_path.empty()) events = ingest_events_file(events_path, tax, io);
    ex = encode_for_model(model, tax, records, events);
  } else {
    for (const auto& r : records) ex.push_back(encode_profile_example(r, model.norm()));
  }
  return Trainer<Real>::evaluate_model(model, ex, !model.spec().with_sequence);
}

// ------------------------------------------------------------------ ablation

struct AblationVariant {
  std::string name;
  std::vector<std::string> overrides;
};

// The five variants of the model comparison, as overrides of a base config.
inline std::vector<AblationVariant> ablation_variants() {
  return {
      {"HUIHEN", {}},
      {"HUIHEN-withoutTUGRU-AuxNet-xgb", {"gru.time_aware=off", "gru.user_item_aware=off"}},
      {"HUIHEN-withoutAuxNet", {"train.aux_pretrain=off"}},
      {"HUIHEN-AuxNet-withoutxgb", {"train.teacher_guidance=off"}},
      {"GRU-AuxNet-xgb", {"model.sessions=off", "gru.time_aware=off", "gru.user_item_aware=off", "train.aux_pretrain=off"}},
  };
}

struct AblationRow {
  std::string variant;
  double val_auc = 0.0, val_ks = 0.0;
  double test_auc = std::nan(""), test_ks = std::nan("");
};

inline void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "variant,val_auc,val_ks,test_auc,test_ks\n";
  for (const auto& r : rows)
    out << r.variant << ',' << format_double(r.val_auc) << ',' << format_double(r.val_ks) << ','
        << format_double(r.test_auc) << ',' << format_double(r.test_ks) << '\n';
}

// Runs every variant; pretraining runs once per distinct guidance setting.
template <class Real>
std::vector<AblationRow> run_ablation(const Config& base, const BehaviorData& data,
                                      std::span<const ProfileRecord> old_data,
                                      const std::map<std::string, double>* teacher,
                                      std::span<const ProfileRecord> test_records = {},
                                      const std::string& test_events_path = "",
                                      const std::vector<AblationVariant>& variants = ablation_variants(),
                                      const EpochHook& on_epoch = {}) {
  std::map<bool, Checkpoint> pretrained;
  std::vector<AblationRow> rows;
  for (const auto& variant : variants) {
    Config c = base;
    for (const auto& o : variant.overrides) c.set(o);
    const Checkpoint* init = nullptr;
    if (c.get_bool("train.aux_pretrain")) {
      const bool guide = guidance_enabled(c);
      auto it = pretrained.find(guide);
      if (it == pretrained.end()) {
        if (old_data.empty()) throw Error("ablate: variant " + variant.name + " needs old data for pretraining");
        auto pre = pretrain<Real>(c, old_data, teacher, on_epoch);
        it = pretrained.emplace(guide, pre.model.to_checkpoint()).first;
      }
      init = &it->second;
    }
    auto run = train_full<Real>(c, data, init, on_epoch);
    AblationRow row;
    row.variant = variant.name;
    row.val_auc = run.val.auc;
    row.val_ks = run.val.ks;
    if (!test_records.empty()) {
      const auto ck = run.model.to_checkpoint();
      const auto ev = evaluate_records(run.model, ck, test_records, test_events_path, c);
      row.test_auc = ev.auc;
      row.test_ks = ev.ks;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace huihen
