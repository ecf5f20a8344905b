// The full hierarchical network and its profile-only (pretraining) subset.
//
// Parameter arrays are named; the names are the checkpoint keys:
//   embed.item.<class> embed.op embed.widget embed.week embed.month
//   fan.item.<class>.{w,b} fan.op.{w,b} fan.widget.{w,b} fan.time.{w,b} fan.profile.{w,b}
//   session_gru.*  history_gru.*  history_gru.item_embed  flat_gru.*
//   upi.dense<l>.{w,b} upi.prelu<l>  loss.alpha_raw
// plus the non-trainable normalization arrays norm.mean and norm.var.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "huihen/checkpoint.hpp"
#include "huihen/dataset.hpp"
#include "huihen/embed_field.hpp"
#include "huihen/recurrent_cells.hpp"
#include "huihen/rng.hpp"
#include "huihen/tape.hpp"
#include "huihen/upi_head.hpp"

namespace huihen {

struct ModelSpec {
  std::size_t embed_dim = 10;
  std::size_t time_dim = 10;
  std::size_t hidden = 30;
  std::size_t profile_dim = 0;
  std::vector<std::size_t> mlp_widths{50, 25, 2};
  bool use_bias = true;
  bool field_aware = true;
  bool time_aware = true;
  bool user_item_aware = true;
  bool sessions = true;
  bool with_sequence = true;  // false: profile-only network
  std::size_t flat_max_events = 250;
  double prelu_init = 0.5;
  double alpha_init = 1.0;
  double q_init = 0.01;
  double clamp_eps = 1e-7;
  AmountTransform amount = AmountTransform::kLog;
  SessionConfig session;
  std::vector<std::string> product_classes;
  std::vector<std::size_t> item_rows;
  std::size_t op_rows = 0;
  std::size_t widget_rows = 0;
  std::size_t target_rows = 1;

  std::size_t field_count() const { return product_classes.size() + 3; }
  std::size_t upi_input() const { return 2 * hidden + profile_dim; }

  void set_vocabulary(const Taxonomy& taxonomy, const Vocabulary& vocab) {
    product_classes = taxonomy.product_classes();
    item_rows.clear();
    for (std::size_t c = 0; c < product_classes.size(); ++c) item_rows.push_back(vocab.item_rows(c));
    op_rows = static_cast<std::size_t>(taxonomy.op_rows());
    widget_rows = static_cast<std::size_t>(taxonomy.widget_rows());
    target_rows = vocab.target_rows();
  }

  EncodeOptions encode_options() const {
    return {session, amount, sessions, flat_max_events};
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["embed_dim"] = embed_dim;
    j["time_dim"] = time_dim;
    j["hidden"] = hidden;
    j["profile_dim"] = profile_dim;
    j["mlp_widths"] = mlp_widths;
    j["use_bias"] = use_bias;
    j["field_aware"] = field_aware;
    j["time_aware"] = time_aware;
    j["user_item_aware"] = user_item_aware;
    j["sessions"] = sessions;
    j["with_sequence"] = with_sequence;
    j["flat_max_events"] = flat_max_events;
    j["prelu_init"] = prelu_init;
    j["alpha_init"] = alpha_init;
    j["q_init"] = q_init;
    j["clamp_eps"] = clamp_eps;
    j["amount"] = amount == AmountTransform::kLog ? "log" : "log1p";
    j["session"] = {{"gap_seconds", session.gap_seconds},
                    {"min_events", session.min_events},
                    {"max_sessions", session.max_sessions},
                    {"max_events", session.max_events}};
    j["product_classes"] = product_classes;
    j["item_rows"] = item_rows;
    j["op_rows"] = op_rows;
    j["widget_rows"] = widget_rows;
    j["target_rows"] = target_rows;
    return j;
  }

  static ModelSpec from_json(const nlohmann::json& j) {
    ModelSpec s;
    s.embed_dim = j.at("embed_dim");
    s.time_dim = j.at("time_dim");
    s.hidden = j.at("hidden");
    s.profile_dim = j.at("profile_dim");
    s.mlp_widths = j.at("mlp_widths").get<std::vector<std::size_t>>();
    s.use_bias = j.at("use_bias");
    s.field_aware = j.at("field_aware");
    s.time_aware = j.at("time_aware");
    s.user_item_aware = j.at("user_item_aware");
    s.sessions = j.at("sessions");
    s.with_sequence = j.at("with_sequence");
    s.flat_max_events = j.at("flat_max_events");
    s.prelu_init = j.at("prelu_init");
    s.alpha_init = j.at("alpha_init");
    s.q_init = j.at("q_init");
    s.clamp_eps = j.at("clamp_eps");
    s.amount = j.at("amount") == "log" ? AmountTransform::kLog : AmountTransform::kLog1p;
    const auto& se = j.at("session");
    s.session.gap_seconds = se.at("gap_seconds");
    s.session.min_events = se.at("min_events");
    s.session.max_sessions = se.at("max_sessions");
    s.session.max_events = se.at("max_events");
    s.product_classes = j.at("product_classes").get<std::vector<std::string>>();
    s.item_rows = j.at("item_rows").get<std::vector<std::size_t>>();
    s.op_rows = j.at("op_rows");
    s.widget_rows = j.at("widget_rows");
    s.target_rows = j.at("target_rows");
    return s;
  }

  std::string config_hash() const { return hex64(fnv1a(to_json().dump())); }

  // Identity of the arrays shared between the pretraining and full networks.
  std::string upi_hash() const {
    nlohmann::json j;
    j["hidden"] = hidden;
    j["profile_dim"] = profile_dim;
    j["mlp_widths"] = mlp_widths;
    j["use_bias"] = use_bias;
    j["field_aware"] = field_aware;
    return hex64(fnv1a(j.dump()));
  }

  // The pretraining network for this configuration.
  ModelSpec profile_only() const {
    ModelSpec s = *this;
    s.with_sequence = false;
    return s;
  }
};

inline bool is_upi_array(const std::string& name) {
  return name.rfind("fan.profile.", 0) == 0 || name.rfind("upi.", 0) == 0 ||
         name.rfind("loss.", 0) == 0;
}

template <class Real>
struct Param {
  std::string name;
  Shape shape;
  std::vector<Real> value;
};

// Vars of one binding of the model onto a tape.
struct ModelVars {
  EmbeddingVars emb;
  std::vector<FieldTransform> fields;  // indexed like Taxonomy fields
  FieldTransform profile;
  TimeAwareGruVars session_tgru;
  StandardGruVars session_sgru;
  UserItemGruVars history_ugru;
  StandardGruVars history_sgru;
  Var item_embed;
  StandardGruVars flat_gru;
  UpiVars upi;
  Var alpha_raw;
  std::vector<Var> by_index;  // parallel to Model::params()
};

template <class Real>
class Model {
 public:
  Model() = default;

  Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    if (spec_.mlp_widths.empty() || spec_.mlp_widths.back() != 2)
      throw ConfigError("config key 'mlp.widths': last layer must have width 2");
    if (spec_.profile_dim == 0) throw ConfigError("model: profile dimension is zero");
    allocate();
    initialize(seed);
    norm_.mean.assign(spec_.profile_dim, 0.0);
    norm_.var.assign(spec_.profile_dim, 1.0);
  }

  const ModelSpec& spec() const { return spec_; }
  std::vector<Param<Real>>& params() { return params_; }
  const std::vector<Param<Real>>& params() const { return params_; }

  NormalizationStats& norm() { return norm_; }
  const NormalizationStats& norm() const { return norm_; }
  Vocabulary& vocab() { return vocab_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::map<std::string, std::string>& meta() { return meta_; }
  const std::map<std::string, std::string>& meta() const { return meta_; }

  Param<Real>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }
  const Param<Real>* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  ModelVars bind(Tape<Real>& tape) const {
    ModelVars mv;
    mv.by_index.reserve(params_.size());
    for (const auto& p : params_) mv.by_index.push_back(tape.parameter(p.value, p.shape));
    auto v = [&](const std::string& name) {
      auto it = index_.find(name);
      return it == index_.end() ? Var{} : mv.by_index[it->second];
    };
    const std::size_t n_layers = spec_.mlp_widths.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
      mv.upi.w.push_back(v("upi.dense" + std::to_string(l) + ".w"));
      mv.upi.b.push_back(v("upi.dense" + std::to_string(l) + ".b"));
      if (l + 1 < n_layers) mv.upi.alpha.push_back(v("upi.prelu" + std::to_string(l)));
    }
    mv.alpha_raw = v("loss.alpha_raw");
    mv.profile = {v("fan.profile.w"), v("fan.profile.b")};
    if (!spec_.with_sequence) return mv;

    mv.emb.dim = spec_.embed_dim;
    for (const auto& c : spec_.product_classes) mv.emb.item_tables.push_back(v("embed.item." + c));
    mv.emb.op_table = v("embed.op");
    mv.emb.widget_table = v("embed.widget");
    mv.emb.week_table = v("embed.week");
    mv.emb.month_table = v("embed.month");
    for (const auto& f : field_names()) mv.fields.push_back({v("fan." + f + ".w"), v("fan." + f + ".b")});
    auto gru = [&](const std::string& prefix, auto& g) {
      g.w_u = v(prefix + ".w_u");
      g.w_r = v(prefix + ".w_r");
      g.w_p = v(prefix + ".w_p");
      g.b_u = v(prefix + ".b_u");
      g.b_r = v(prefix + ".b_r");
      g.b_p = v(prefix + ".b_p");
    };
    if (spec_.sessions) {
      if (spec_.time_aware) {
        gru("session_gru", mv.session_tgru);
        mv.session_tgru.w_m = v("session_gru.w_m");
        mv.session_tgru.b_m = v("session_gru.b_m");
        mv.session_tgru.q = v("session_gru.q");
      } else {
        gru("session_gru", mv.session_sgru);
      }
      if (spec_.user_item_aware) {
        gru("history_gru", mv.history_ugru);
        mv.item_embed = v("history_gru.item_embed");
      } else {
        gru("history_gru", mv.history_sgru);
      }
    } else {
      gru("flat_gru", mv.flat_gru);
    }
    return mv;
  }

  // Field-wise profile features; the identity when field transforms are off.
  Var profile_features(Tape<Real>& tape, const ModelVars& mv, std::span<const double> z) const {
    std::vector<Real> zr(z.begin(), z.end());
    Var x = tape.constant(zr);
    if (!spec_.field_aware) return x;
    return field_aware(tape, x, mv.profile);
  }

  // Profile path with zero-filled sequence slots.
  UpiOutput forward_profile(Tape<Real>& tape, const ModelVars& mv, const Example& ex,
                            const DropoutSpec* dropout) const {
    Var pf = profile_features(tape, mv, ex.profile);
    Var zero = tape.zeros(Shape::vec(spec_.hidden));
    return fuse_and_score(tape, mv.upi, zero, zero, pf, dropout, spec_.clamp_eps);
  }

  UpiOutput forward(Tape<Real>& tape, const ModelVars& mv, const Example& ex,
                    const DropoutSpec* dropout) const {
    if (!spec_.with_sequence) return forward_profile(tape, mv, ex, dropout);
    Var pf = profile_features(tape, mv, ex.profile);
    const std::size_t hidden = spec_.hidden;
    FeatureCache cache;
    Var t_m = tape.zeros(Shape::vec(hidden));
    Var h_m = t_m;
    if (spec_.sessions) {
      std::vector<Var> intentions;
      intentions.reserve(ex.sessions.size());
      for (const auto& s : ex.sessions) {
        if (spec_.time_aware) {
          std::vector<SessionStep> steps;
          steps.reserve(s.size());
          for (const auto& e : s)
            steps.push_back({event_features(tape, mv, e, cache), time_features(tape, mv, e.week, true, cache),
                             time_features(tape, mv, e.month, false, cache), e.dt});
          intentions.push_back(encode_session(tape, mv.session_tgru, std::span<const SessionStep>(steps), hidden));
        } else {
          std::vector<Var> xs;
          xs.reserve(s.size());
          for (const auto& e : s) xs.push_back(event_features(tape, mv, e, cache));
          intentions.push_back(encode_standard(tape, mv.session_sgru, std::span<const Var>(xs), hidden));
        }
      }
      if (!intentions.empty()) {
        t_m = intentions.back();
        if (spec_.user_item_aware) {
          Var x_item = tape.row(mv.item_embed, ex.target_row);
          h_m = encode_history(tape, mv.history_ugru, std::span<const Var>(intentions), pf, x_item, hidden);
        } else {
          h_m = encode_standard(tape, mv.history_sgru, std::span<const Var>(intentions), hidden);
        }
      }
    } else if (!ex.flat.empty()) {
      std::vector<Var> xs;
      xs.reserve(ex.flat.size());
      for (const auto& e : ex.flat) xs.push_back(event_features(tape, mv, e, cache));
      h_m = encode_standard(tape, mv.flat_gru, std::span<const Var>(xs), hidden);
    }
    return fuse_and_score(tape, mv.upi, t_m, h_m, pf, dropout, spec_.clamp_eps);
  }

  // Checkpoint with every array and the metadata needed to rebuild the model.
  Checkpoint to_checkpoint() const {
    Checkpoint ck;
    ck.config_hash = spec_.config_hash();
    ck.meta = meta_;
    ck.meta["model.spec"] = spec_.to_json().dump();
    ck.meta["model.upi_hash"] = spec_.upi_hash();
    ck.meta["stage"] = spec_.with_sequence ? "full" : "pretrain";
    if (spec_.with_sequence) ck.meta["vocab"] = vocab_.to_json().dump();
    for (const auto& p : params_) {
      CheckpointArray a;
      a.name = p.name;
      if (p.shape.rank >= 1) a.dims.push_back(p.shape.rows);
      if (p.shape.rank == 2) a.dims.push_back(p.shape.cols);
      a.values.assign(p.value.begin(), p.value.end());
      ck.arrays.push_back(std::move(a));
    }
    ck.arrays.push_back({"norm.mean", {norm_.mean.size()}, norm_.mean});
    ck.arrays.push_back({"norm.var", {norm_.var.size()}, norm_.var});
    ck.meta["norm.epsilon"] = format_double(norm_.epsilon);
    return ck;
  }

  static Model from_checkpoint(const Checkpoint& ck) {
    const auto spec_text = ck.meta_or("model.spec");
    if (spec_text.empty()) throw Error("checkpoint: missing model.spec metadata");
    const auto j = nlohmann::json::parse(spec_text, nullptr, false);
    if (j.is_discarded()) throw Error("checkpoint: model.spec metadata is not JSON");
    Model m(ModelSpec::from_json(j), 0);
    if (m.spec_.config_hash() != ck.config_hash)
      throw Error("checkpoint: config hash " + ck.config_hash + " does not match its model spec (" +
                  m.spec_.config_hash() + ")");
    m.meta_ = ck.meta;
    if (m.spec_.with_sequence) m.vocab_ = Vocabulary::from_json(nlohmann::json::parse(ck.meta_or("vocab", "{}")));
    for (auto& p : m.params_) m.load_array(ck, p);
    m.load_norm(ck);
    return m;
  }

  // Copies the profile-path and UPI arrays (and normalization) from a
  // pretraining checkpoint.
  void adopt_pretrained(const Checkpoint& ck) {
    if (ck.meta_or("model.upi_hash") != spec_.upi_hash())
      throw Error("pretrain checkpoint is incompatible: UPI configuration differs (" +
                  ck.meta_or("model.upi_hash") + " vs " + spec_.upi_hash() + ")");
    std::string adopted;
    for (auto& p : params_) {
      if (!is_upi_array(p.name)) continue;
      load_array(ck, p);
      adopted += (adopted.empty() ? "" : ",") + p.name;
    }
    load_norm(ck);
    meta_["lineage.pretrain_hash"] = ck.config_hash;
    meta_["lineage.pretrain_arrays"] = adopted;
  }

  // Copies UPI arrays from another model in memory.
  void copy_upi_from(const Model& other) {
    for (auto& p : params_) {
      if (!is_upi_array(p.name)) continue;
      const auto* q = other.find(p.name);
      if (!q || !(q->shape == p.shape)) throw ShapeError("copy_upi_from: missing or mismatched " + p.name);
      p.value = q->value;
    }
    norm_ = other.norm_;
  }

 private:
  struct FeatureCache {
    std::map<std::uint64_t, Var> rows;  // (field, row) -> transformed feature
    Var week[7];
    Var month[31];
  };

  std::vector<std::string> field_names() const {
    std::vector<std::string> names;
    for (const auto& c : spec_.product_classes) names.push_back("item." + c);
    names.push_back("op");
    names.push_back("widget");
    names.push_back("time");
    return names;
  }

  Var transform(Tape<Real>& tape, const ModelVars& mv, Var e, std::size_t field) const {
    if (!spec_.field_aware) return e;
    return field_aware(tape, e, mv.fields[field]);
  }

  Var event_features(Tape<Real>& tape, const ModelVars& mv, const EncodedEvent& ev, FeatureCache& cache) const {
    if (ev.kind == EncodedEvent::Kind::kPad) return tape.zeros(Shape::vec(spec_.embed_dim));
    if (ev.kind == EncodedEvent::Kind::kTransformOp)
      return transform(tape, mv, embed_event(tape, mv.emb, ev), ev.field);
    const std::uint64_t key = (static_cast<std::uint64_t>(ev.field) << 32) | ev.row;
    auto it = cache.rows.find(key);
    if (it != cache.rows.end()) return it->second;
    Var f = transform(tape, mv, embed_event(tape, mv.emb, ev), ev.field);
    cache.rows.emplace(key, f);
    return f;
  }

  Var time_features(Tape<Real>& tape, const ModelVars& mv, std::size_t index, bool week,
                    FeatureCache& cache) const {
    Var& slot = week ? cache.week[index] : cache.month[index];
    if (!slot.valid())
      slot = transform(tape, mv, tape.row(week ? mv.emb.week_table : mv.emb.month_table, index),
                       spec_.field_count() - 1);
    return slot;
  }

  void add(const std::string& name, Shape shape) {
    index_[name] = params_.size();
    params_.push_back({name, shape, std::vector<Real>(shape.size(), Real(0))});
  }

  void add_dense(const std::string& prefix, std::size_t out, std::size_t in, bool bias) {
    add(prefix + ".w", Shape::mat(out, in));
    if (bias) add(prefix + ".b", Shape::vec(out));
  }

  void add_gru(const std::string& prefix, std::size_t hidden, std::size_t gate_cols, std::size_t cand_cols) {
    add(prefix + ".w_u", Shape::mat(hidden, gate_cols));
    add(prefix + ".w_r", Shape::mat(hidden, gate_cols));
    add(prefix + ".w_p", Shape::mat(hidden, cand_cols));
    add(prefix + ".b_u", Shape::vec(hidden));
    add(prefix + ".b_r", Shape::vec(hidden));
    add(prefix + ".b_p", Shape::vec(hidden));
  }

  void allocate() {
    const std::size_t d = spec_.embed_dim, dt = spec_.time_dim, hd = spec_.hidden, p = spec_.profile_dim;
    if (spec_.with_sequence) {
      if (spec_.item_rows.size() != spec_.product_classes.size())
        throw ConfigError("model: item table count does not match product classes");
      for (std::size_t c = 0; c < spec_.product_classes.size(); ++c)
        add("embed.item." + spec_.product_classes[c], Shape::mat(spec_.item_rows[c], d));
      add("embed.op", Shape::mat(std::max<std::size_t>(spec_.op_rows, 1), d));
      add("embed.widget", Shape::mat(std::max<std::size_t>(spec_.widget_rows, 1), d));
      const bool time_tables = spec_.sessions && spec_.time_aware;
      if (time_tables) {
        add("embed.week", Shape::mat(7, dt));
        add("embed.month", Shape::mat(31, dt));
      }
      if (spec_.field_aware) {
        for (const auto& f : field_names()) {
          if (f == "time") {
            if (time_tables) add_dense("fan.time", dt, dt, spec_.use_bias);
          } else {
            add_dense("fan." + f, d, d, spec_.use_bias);
          }
        }
      }
      if (spec_.sessions) {
        if (spec_.time_aware) {
          const TimeAwareGruDims td{d, hd, dt};
          add_gru("session_gru", hd, td.gate_cols(), td.candidate_cols());
          add("session_gru.w_m", Shape::mat(hd, d));
          add("session_gru.b_m", Shape::vec(hd));
          add("session_gru.q", Shape::vec(d));
        } else {
          const StandardGruDims sd{d, hd};
          add_gru("session_gru", hd, sd.gate_cols(), sd.candidate_cols());
        }
        if (spec_.user_item_aware) {
          const UserItemGruDims ud{hd, hd, p, d};
          add_gru("history_gru", hd, ud.gate_cols(), ud.candidate_cols());
          add("history_gru.item_embed", Shape::mat(spec_.target_rows, d));
        } else {
          const StandardGruDims sd{hd, hd};
          add_gru("history_gru", hd, sd.gate_cols(), sd.candidate_cols());
        }
      } else {
        const StandardGruDims sd{d, hd};
        add_gru("flat_gru", hd, sd.gate_cols(), sd.candidate_cols());
      }
    }
    if (spec_.field_aware) add_dense("fan.profile", p, p, spec_.use_bias);
    std::size_t in = spec_.upi_input();
    for (std::size_t l = 0; l < spec_.mlp_widths.size(); ++l) {
      add_dense("upi.dense" + std::to_string(l), spec_.mlp_widths[l], in, true);
      if (l + 1 < spec_.mlp_widths.size()) add("upi.prelu" + std::to_string(l), Shape::scalar());
      in = spec_.mlp_widths[l];
    }
    add("loss.alpha_raw", Shape::scalar());
  }

  static bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  }

  // Uniform Xavier for matrices and embedding rows, zero biases, and the
  // documented constants for Q, the PReLU slopes and the aux weight.
  void initialize(std::uint64_t seed) {
    for (auto& p : params_) {
      Rng rng(derive_seed(seed, p.name));
      auto fill_uniform = [&](double limit) {
        for (auto& x : p.value) x = static_cast<Real>(rng.uniform(-limit, limit));
      };
      if (p.name.rfind("upi.prelu", 0) == 0) {
        p.value.assign(1, static_cast<Real>(spec_.prelu_init));
      } else if (p.name == "loss.alpha_raw") {
        p.value.assign(1, static_cast<Real>(inverse_softplus(spec_.alpha_init)));
      } else if (ends_with(p.name, ".q")) {
        fill_uniform(spec_.q_init);
      } else if (p.name.rfind("embed.", 0) == 0 || ends_with(p.name, ".item_embed")) {
        fill_uniform(std::sqrt(6.0 / (1.0 + static_cast<double>(p.shape.cols))));
      } else if (p.shape.rank == 2) {
        fill_uniform(std::sqrt(6.0 / static_cast<double>(p.shape.rows + p.shape.cols)));
      }
    }
  }

  void load_array(const Checkpoint& ck, Param<Real>& p) const {
    const auto* a = ck.find(p.name);
    if (!a) throw Error("checkpoint: missing array " + p.name);
    std::vector<std::size_t> dims;
    if (p.shape.rank >= 1) dims.push_back(p.shape.rows);
    if (p.shape.rank == 2) dims.push_back(p.shape.cols);
    if (a->dims != dims) throw ShapeError("checkpoint: array " + p.name + " has the wrong shape");
    for (std::size_t i = 0; i < a->values.size(); ++i) p.value[i] = static_cast<Real>(a->values[i]);
  }

  void load_norm(const Checkpoint& ck) {
    const auto* mean = ck.find("norm.mean");
    const auto* var = ck.find("norm.var");
    if (!mean || !var) throw Error("checkpoint: missing normalization arrays");
    if (mean->values.size() != spec_.profile_dim || var->values.size() != spec_.profile_dim)
      throw ShapeError("checkpoint: normalization arrays have the wrong length");
    norm_.mean = mean->values;
    norm_.var = var->values;
    double eps = 1e-8;
    if (parse_double(ck.meta_or("norm.epsilon", "1e-08"), eps)) norm_.epsilon = eps;
  }

  ModelSpec spec_;
  std::vector<Param<Real>> params_;
  std::map<std::string, std::size_t> index_;
  NormalizationStats norm_;
  Vocabulary vocab_;
  std::map<std::string, std::string> meta_;
};

}  // namespace huihen
