// Layered configuration: built-in defaults < JSON file < key=value overrides.
//
// Keys are dotted paths ("train.learning_rate"). A file may nest objects or
// use dotted keys directly. Every key must exist in the defaults, and values
// must match the default's type; violations raise ConfigError naming the key.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "huihen/common.hpp"

namespace huihen {

class Config {
 public:
  using json = nlohmann::json;

  static Config defaults() {
    Config c;
    auto& v = c.values_;
    // sessions
    v["session.gap_seconds"] = 3600;
    v["session.min_events"] = 3;
    v["session.max_sessions"] = 50;
    v["session.max_events"] = 25;
    // ingestion
    v["data.taxonomy"] = "";
    v["data.merge_enabled"] = true;
    v["data.strict_codes"] = false;
    v["data.tz_offset_minutes"] = 0;
    v["data.positive_label_means"] = "overdue";
    // embedding / field transforms
    v["embed.dim"] = 10;
    v["embed.time_dim"] = 10;
    v["embed.amount_transform"] = "log";
    v["fan.enabled"] = true;
    v["fan.use_bias"] = true;
    v["norm.epsilon"] = 1e-8;
    // recurrent encoders
    v["gru.hidden"] = 30;
    v["gru.time_aware"] = true;
    v["gru.user_item_aware"] = true;
    v["gru.q_init"] = 0.01;
    v["model.sessions"] = true;
    v["model.flat_max_events"] = 250;
    // fusion head and losses
    v["mlp.widths"] = json::array({50, 25, 2});
    v["mlp.dropout"] = 0.6;
    v["dropout.semantics"] = "keep";
    v["prelu.init"] = 0.5;
    v["upi.freeze"] = false;
    v["loss.mode"] = "ce_plus_symkl";
    v["loss.alpha_init"] = 1.0;
    v["loss.clamp_epsilon"] = 1e-7;
    // optimization
    v["train.learning_rate"] = 0.001;
    v["train.beta1"] = 0.9;
    v["train.beta2"] = 0.999;
    v["train.adam_epsilon"] = 1e-8;
    v["train.batch_size"] = 64;
    v["train.epochs"] = 10;
    v["train.seed"] = 1;
    v["train.val_fraction"] = 0.2;
    v["train.clip_norm"] = 5.0;
    v["train.strict"] = false;
    v["train.class_weight"] = 1.0;
    v["train.aux_pretrain"] = true;
    v["train.teacher_guidance"] = true;
    v["train.precision"] = 64;
    v["pretrain.epochs"] = 10;
    // built-in teacher
    v["teacher.l2"] = 0.01;
    v["teacher.max_iters"] = 10000;
    v["teacher.tolerance"] = 1e-6;
    // synthetic scenarios
    v["synth.seed"] = 7;
    v["synth.n_users"] = 10000;
    v["synth.n_test"] = 2500;
    v["synth.n_old"] = 20000;
    v["synth.base_rate"] = 0.053;
    v["synth.brevity"] = 0.0;
    v["synth.habit"] = 0.0;
    v["synth.periodicity"] = 0.0;
    v["synth.profile"] = 0.0;
    v["synth.noise"] = 0.5;
    v["synth.profile_dim"] = 6;
    v["synth.items_per_class"] = 12;
    v["synth.target_items"] = 6;
    v["synth.old_label_flip"] = 0.0;
    v["synth.taxonomy"] = "bank_a";
    // gradcheck command
    v["gradcheck.instances"] = 100;
    v["gradcheck.step"] = 1e-5;
    v["gradcheck.tolerance"] = 1e-4;
    return c;
  }

  void merge_json(const json& j, const std::string& prefix = "") {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object at '" + prefix + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
      if (it->is_object() && !values_.count(key)) {
        merge_json(*it, key);
        continue;
      }
      assign(key, *it);
    }
  }

  void merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: '" + path + "' is not valid JSON");
    merge_json(j);
  }

  // "key=value", typed by the key's default.
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: override '" + assignment + "' is not key=value");
    set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
  }

  void set(const std::string& key, const std::string& text) {
    const json& current = lookup(key);
    json value;
    if (current.is_boolean()) {
      if (text == "on" || text == "true" || text == "1")
        value = true;
      else if (text == "off" || text == "false" || text == "0")
        value = false;
      else
        throw ConfigError("config key '" + key + "': expected on|off|true|false, got '" + text + "'");
    } else if (current.is_number_integer()) {
      std::int64_t n = 0;
      if (!parse_int64(text, n)) throw ConfigError("config key '" + key + "': expected integer, got '" + text + "'");
      value = n;
    } else if (current.is_number()) {
      double d = 0;
      if (!parse_double(text, d)) throw ConfigError("config key '" + key + "': expected number, got '" + text + "'");
      value = d;
    } else if (current.is_array()) {
      std::string body = text;
      if (!body.empty() && body.front() == '[') body = body.substr(1, body.size() - 2);
      value = json::array();
      for (auto part : split(body, ',')) {
        std::int64_t n = 0;
        if (!parse_int64(trim(part), n))
          throw ConfigError("config key '" + key + "': expected integer list, got '" + text + "'");
        value.push_back(n);
      }
    } else {
      value = text;
    }
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  bool get_bool(const std::string& key) const { return lookup(key).get<bool>(); }
  std::int64_t get_int(const std::string& key) const { return lookup(key).get<std::int64_t>(); }
  double get_double(const std::string& key) const { return lookup(key).get<double>(); }
  std::string get_string(const std::string& key) const { return lookup(key).get<std::string>(); }
  std::vector<std::int64_t> get_int_list(const std::string& key) const {
    return lookup(key).get<std::vector<std::int64_t>>();
  }

  // Flat key -> value object; dumps deterministically (keys sorted).
  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  const json& lookup(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key '" + key + "'");
    return it->second;
  }

  void assign(const std::string& key, const json& value) {
    const json& current = lookup(key);
    const bool ok = (current.is_boolean() && value.is_boolean()) ||
                    (current.is_number_integer() && value.is_number_integer()) ||
                    (current.is_number_float() && value.is_number()) ||
                    (current.is_string() && value.is_string()) ||
                    (current.is_array() && value.is_array());
    if (!ok) {
      if (current.is_boolean() && value.is_string()) {
        set(key, value.get<std::string>());
        return;
      }
      throw ConfigError("config key '" + key + "': expected " + std::string(current.type_name()) +
                        ", got " + std::string(value.type_name()));
    }
    if (current.is_number_float())
      values_[key] = value.get<double>();
    else
      values_[key] = value;
  }

  std::map<std::string, json> values_;
};

}  // namespace huihen
