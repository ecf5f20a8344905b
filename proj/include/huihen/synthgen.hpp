// Deterministic synthetic scenarios with planted behavioral signals.
//
// Every user draws three latents and a profile vector:
//   z1  impulsivity   -> shorter, faster final session before applying
//   z2  risk habit    -> larger share of clicks on high-risk products
//   z3  periodicity   -> sessions clustered at the end of the month
//   x   profile       ~ N(0, I_P), observed through per-feature affine scales
// and the label is Bernoulli(sigmoid(b0 + c1 z1 + c2 z2 + c3 z3 + c4 beta.x)),
// with |beta| = 1 and b0 calibrated so the marginal rate equals base_rate.
// Behaviors depend on the latents whatever the coefficients are; the
// coefficients only control how much each latent moves the label.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "huihen/event_model.hpp"
#include "huihen/metrics.hpp"
#include "huihen/rng.hpp"

namespace huihen {

struct ScenarioConfig {
  std::uint64_t seed = 7;
  std::size_t n_users = 10000;
  std::size_t n_test = 2500;
  std::size_t n_old = 20000;
  double base_rate = 0.053;
  double brevity = 0.0;
  double habit = 0.0;
  double periodicity = 0.0;
  double profile = 0.0;
  double noise = 0.5;
  double old_label_flip = 0.0;
  std::size_t profile_dim = 6;
  std::size_t items_per_class = 12;
  std::size_t target_items = 6;
  std::string taxonomy = "bank_a";
};

inline const std::vector<std::string>& reference_product_classes() {
  static const std::vector<std::string> k{"credit_loan", "credit_card", "deposit", "fund",
                                          "wealth",      "insurance",   "forex",   "gold"};
  return k;
}

inline const std::vector<std::string>& reference_op_classes() {
  static const std::vector<std::string> k{
      "fund_purchase", "fund_redeem",    "deposit_in",   "deposit_out",    "transfer_out",
      "transfer_in",   "loan_repay",     "loan_draw",    "card_repay",     "wealth_buy",
      "wealth_redeem", "insurance_pay",  "forex_buy",    "forex_sell",     "gold_buy",
      "gold_sell",     "bill_pay",       "phone_topup",  "utility_pay",    "tax_pay",
      "cash_withdraw", "cash_deposit",   "qr_pay",       "red_packet",     "merchant_pay",
      "fixed_deposit", "deposit_redeem", "stock_transfer", "pension_pay",  "tuition_pay",
      "donation",      "parking_pay",    "fuel_pay"};
  return k;
}

namespace detail {

inline std::string two_digit(std::size_t k) {
  return (k < 10 ? "0" : "") + std::to_string(k);
}

}  // namespace detail

// Raw-code tables shaped like the two banks' apps: "bank_a" has 452 codes
// merging into 8 item-click, 33 operation and 1 widget kinds (42); "bank_b"
// has 367 codes merging into 8 + 28 + 1 (37).
inline std::vector<TaxonomyRow> reference_taxonomy(const std::string& variant) {
  std::size_t n_ops = 0, n_op_codes = 0, n_widget_codes = 0;
  if (variant == "bank_a") {
    n_ops = 33, n_op_codes = 212, n_widget_codes = 200;
  } else if (variant == "bank_b") {
    n_ops = 28, n_op_codes = 177, n_widget_codes = 150;
  } else {
    throw ConfigError("config key 'synth.taxonomy': expected bank_a or bank_b, got '" + variant + "'");
  }
  std::vector<TaxonomyRow> rows;
  for (const auto& c : reference_product_classes())
    for (std::size_t k = 1; k <= 5; ++k) rows.push_back({"clk_" + c + "_" + detail::two_digit(k), Category::kItemClick, c});
  const auto& ops = reference_op_classes();
  for (std::size_t i = 0; i < n_ops; ++i) {
    const std::size_t codes = n_op_codes / n_ops + (i < n_op_codes % n_ops ? 1 : 0);
    for (std::size_t k = 1; k <= codes; ++k)
      rows.push_back({"op_" + ops[i] + "_" + detail::two_digit(k), Category::kTransformOp, ops[i]});
  }
  for (std::size_t k = 1; k <= n_widget_codes; ++k) {
    const std::string n = std::to_string(k);
    rows.push_back({"fw_" + std::string(3 - std::min<std::size_t>(3, n.size()), '0') + n,
                    Category::kFunctionWidget, "widget"});
  }
  return rows;
}

struct SynthEvent {
  std::int64_t ts = 0;
  std::string code;
  std::optional<std::string> item_id;
  std::optional<double> amount;
};

struct SynthUser {
  ProfileRecord profile;
  std::vector<SynthEvent> events;  // time-sorted
  double log_odds = 0.0;
  double z1 = 0.0, z2 = 0.0, z3 = 0.0;
  std::size_t last_session_length = 0;
};

struct SynthSplit {
  std::vector<SynthUser> users;
  double label_rate() const {
    if (users.empty()) return 0.0;
    std::size_t pos = 0;
    for (const auto& u : users) pos += u.profile.label.value_or(0) == 1;
    return static_cast<double>(pos) / static_cast<double>(users.size());
  }
};

inline double signal_scale(const ScenarioConfig& cfg) {
  return std::sqrt(cfg.brevity * cfg.brevity + cfg.habit * cfg.habit + cfg.periodicity * cfg.periodicity +
                   cfg.profile * cfg.profile);
}

// Intercept b0 with E[sigmoid(b0 + s Z)] = rate, Z ~ N(0,1), by bisection on a
// fine trapezoid rule over [-10, 10].
inline double calibrate_intercept(double rate, double s) {
  auto marginal = [s](double b0) {
    const int n = 4000;
    const double lo = -10.0, h = 20.0 / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double z = lo + h * i;
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      const double x = b0 + s * z;
      const double sig = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      acc += w * sig * std::exp(-0.5 * z * z);
    }
    return acc * h / std::sqrt(2.0 * 3.14159265358979323846);
  };
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (marginal(mid) < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Unit-norm profile direction with alternating signs.
inline std::vector<double> profile_direction(std::size_t p) {
  std::vector<double> beta(p);
  double n2 = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    beta[j] = (j % 2 == 0 ? 1.0 : -1.0) * (1.0 - 0.5 * static_cast<double>(j) / static_cast<double>(p));
    n2 += beta[j] * beta[j];
  }
  for (auto& b : beta) b /= std::sqrt(n2);
  return beta;
}

class ScenarioGenerator {
 public:
  explicit ScenarioGenerator(ScenarioConfig cfg)
      : cfg_(std::move(cfg)),
        b0_(calibrate_intercept(cfg_.base_rate, signal_scale(cfg_))),
        beta_(profile_direction(cfg_.profile_dim)) {
    if (cfg_.profile_dim == 0) throw ConfigError("config key 'synth.profile_dim': must be positive");
    if (cfg_.items_per_class == 0 || cfg_.target_items == 0)
      throw ConfigError("config key 'synth.items_per_class' and 'synth.target_items' must be positive");
    const auto rows = reference_taxonomy(cfg_.taxonomy);
    for (const auto& r : rows) {
      if (r.category == Category::kItemClick) item_codes_[r.group].push_back(r.raw_code);
      if (r.category == Category::kTransformOp) op_codes_[r.group].push_back(r.raw_code);
      if (r.category == Category::kFunctionWidget) widget_codes_.push_back(r.raw_code);
    }
    for (const auto& [op, codes] : op_codes_) op_names_.push_back(op);
  }

  const ScenarioConfig& config() const { return cfg_; }
  double intercept() const { return b0_; }

  // `split` names the stream ("train", "test", "old"); users are a pure
  // function of (seed, split, index).
  SynthUser user(const std::string& split, std::size_t index) const {
    Rng rng(derive_seed(derive_seed(cfg_.seed, split), index));
    SynthUser u;
    u.z1 = rng.normal();
    u.z2 = rng.normal();
    u.z3 = rng.normal();
    std::vector<double> x(cfg_.profile_dim);
    for (auto& v : x) v = rng.normal();
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += beta_[j] * x[j];
    u.log_odds = b0_ + cfg_.brevity * u.z1 + cfg_.habit * u.z2 + cfg_.periodicity * u.z3 + cfg_.profile * dot;
    const double p = 1.0 / (1.0 + std::exp(-u.log_odds));
    const int label = rng.bernoulli(p) ? 1 : 0;

    auto& rec = u.profile;
    static const char* prefix_of[] = {"u", "t", "o"};
    const char* prefix = split == "test" ? prefix_of[1] : split == "old" ? prefix_of[2] : prefix_of[0];
    const std::string n = std::to_string(index);
    rec.user_id = prefix + std::string(6 - std::min<std::size_t>(6, n.size()), '0') + n;
    rec.features.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double scale = std::pow(10.0, static_cast<double>(j % 4) - 1.0);
      rec.features[j] = std::round((scale * x[j] + static_cast<double>(j)) * 1e6) / 1e6;
    }
    rec.label = label;
    const std::size_t target = rng.below(cfg_.target_items);
    rec.applied_item_id = "credit_loan_item_" + detail::two_digit(target);

    const std::int64_t loan_day = 18500 + static_cast<std::int64_t>(rng.below(120));
    rec.loan_ts = loan_day * 86400 + 14 * 3600 + static_cast<std::int64_t>(rng.below(8 * 3600));
    generate_events(rng, u, loan_day, rec.applied_item_id);
    std::stable_sort(u.events.begin(), u.events.end(),
                     [](const SynthEvent& a, const SynthEvent& b) { return a.ts < b.ts; });
    return u;
  }

  SynthSplit split(const std::string& name, std::size_t n) const {
    SynthSplit s;
    s.users.reserve(n);
    for (std::size_t i = 0; i < n; ++i) s.users.push_back(user(name, i));
    return s;
  }

  // Old data: same process, events dropped, labels flipped with the
  // configured probability (from a separate stream).
  SynthSplit old_split() const {
    SynthSplit s = split("old", cfg_.n_old);
    Rng flip(derive_seed(cfg_.seed, "old_label_flip"));
    for (auto& u : s.users) {
      u.events.clear();
      if (flip.bernoulli(cfg_.old_label_flip)) u.profile.label = 1 - *u.profile.label;
    }
    return s;
  }

 private:
  static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  void add_event(Rng& rng, SynthUser& u, std::int64_t ts, double risky_share) const {
    SynthEvent ev;
    ev.ts = ts;
    const double kind = rng.uniform();
    const auto& classes = reference_product_classes();
    if (kind < 0.55) {
      // classes 0, 1 are the high-risk products
      const std::size_t c = rng.bernoulli(risky_share) ? rng.below(2) : 2 + rng.below(classes.size() - 2);
      const auto& codes = item_codes_.at(classes[c]);
      ev.code = codes[rng.below(codes.size())];
      ev.item_id = classes[c] + "_item_" + detail::two_digit(rng.below(cfg_.items_per_class));
    } else if (kind < 0.8) {
      const auto& op = op_names_[rng.below(op_names_.size())];
      const auto& codes = op_codes_.at(op);
      ev.code = codes[rng.below(codes.size())];
      ev.amount = std::max(0.01, std::round(std::exp(rng.normal(6.0, 1.0)) * 100.0) / 100.0);
    } else {
      ev.code = widget_codes_[rng.below(widget_codes_.size())];
    }
    u.events.push_back(std::move(ev));
  }

  void generate_events(Rng& rng, SynthUser& u, std::int64_t loan_day, const std::string& applied) const {
    const double risky_share = sigmoid(-0.5 + 1.5 * u.z2);
    const double month_end = sigmoid(-1.0 + 2.0 * u.z3);

    // History sessions on distinct days within the 90 days before applying.
    const std::size_t n_hist = 6 + rng.below(5);
    std::set<std::int64_t> days;
    for (std::size_t guard = 0; days.size() < n_hist && guard < 1000; ++guard) {
      std::int64_t day = loan_day - 1 - static_cast<std::int64_t>(rng.below(90));
      if (rng.bernoulli(month_end)) {
        // move to the nearest earlier month-end day (25th or later)
        for (int k = 0; k < 31 && day_of_month_from_days(day) < 25; ++k) --day;
        if (day < loan_day - 90) continue;
      }
      days.insert(day);
    }
    for (std::int64_t day : days) {
      std::int64_t ts = day * 86400 + 8 * 3600 + static_cast<std::int64_t>(rng.below(12 * 3600));
      const std::size_t len = 3 + rng.below(5);
      for (std::size_t k = 0; k < len; ++k) {
        if (k) ts += 5 + std::min<std::int64_t>(1200, static_cast<std::int64_t>(rng.exponential(120.0)));
        add_event(rng, u, ts, risky_share);
      }
    }

    // Final session ending just before the application.
    const double raw_len = 12.0 - 3.0 * u.z1 + cfg_.noise * rng.normal();
    const auto len = static_cast<std::size_t>(std::clamp(std::llround(raw_len), 3LL, 25LL));
    u.last_session_length = len;
    const double mean_gap = 150.0 * std::exp(-0.6 * u.z1);
    std::vector<std::int64_t> gaps(len - 1);
    for (auto& g : gaps) g = 5 + std::min<std::int64_t>(1200, static_cast<std::int64_t>(rng.exponential(mean_gap)));
    std::int64_t ts = u.profile.loan_ts - 1 - static_cast<std::int64_t>(rng.below(60));
    std::vector<std::int64_t> stamps(len);
    stamps[len - 1] = ts;
    for (std::size_t k = len - 1; k-- > 0;) stamps[k] = stamps[k + 1] - gaps[k];
    for (std::size_t k = 0; k + 1 < len; ++k) add_event(rng, u, stamps[k], risky_share);
    SynthEvent apply;
    apply.ts = stamps[len - 1];
    apply.code = item_codes_.at("credit_loan")[0];
    apply.item_id = applied;
    u.events.push_back(apply);

    // Noise: short night-time sessions (filtered out as too short) and a few
    // events after the application (excluded as post-loan).
    const std::size_t n_noise = rng.below(4);
    for (std::size_t k = 0; k < n_noise; ++k) {
      const std::int64_t day = loan_day - static_cast<std::int64_t>(rng.below(90));
      std::int64_t t = day * 86400 + 3600 + static_cast<std::int64_t>(rng.below(3 * 3600));
      const std::size_t m = 1 + rng.below(2);
      for (std::size_t j = 0; j < m; ++j, t += 60) add_event(rng, u, t, risky_share);
    }
    const std::size_t n_post = rng.below(3);
    for (std::size_t k = 0; k < n_post; ++k)
      add_event(rng, u, u.profile.loan_ts + 7200 + static_cast<std::int64_t>(rng.below(3600)), risky_share);
  }

  ScenarioConfig cfg_;
  double b0_;
  std::vector<double> beta_;
  std::map<std::string, std::vector<std::string>> item_codes_;
  std::map<std::string, std::vector<std::string>> op_codes_;
  std::vector<std::string> op_names_;
  std::vector<std::string> widget_codes_;
};

// AUC of the Bayes-optimal scorer sigmoid(true log-odds).
inline double oracle_auc(const SynthSplit& s) {
  std::vector<ScoredSample> v;
  v.reserve(s.users.size());
  for (const auto& u : s.users) v.push_back({1.0 / (1.0 + std::exp(-u.log_odds)), u.profile.label.value_or(0)});
  return auc(v);
}

inline void write_events_jsonl(std::ostream& out, const SynthSplit& s) {
  for (const auto& u : s.users)
    for (const auto& ev : u.events) {
      nlohmann::ordered_json j;
      j["user_id"] = u.profile.user_id;
      j["ts"] = ev.ts;
      j["code"] = ev.code;
      if (ev.item_id) j["item_id"] = *ev.item_id;
      if (ev.amount) j["amount"] = *ev.amount;
      out << j.dump() << '\n';
    }
}

inline void write_profiles_csv(std::ostream& out, const SynthSplit& s, std::size_t p) {
  out << FeatureSchema::with_dim(p).header() << '\n';
  for (const auto& u : s.users) {
    const auto& r = u.profile;
    out << r.user_id;
    for (double f : r.features) out << ',' << format_double(f);
    out << ',' << r.applied_item_id << ',' << r.loan_ts << ',';
    if (r.label) out << *r.label;
    out << '\n';
  }
}

inline void write_truth_csv(std::ostream& out, const SynthSplit& s) {
  out << "user_id,log_odds,z_impulsivity,z_habit,z_periodicity,last_session_length,label\n";
  for (const auto& u : s.users)
    out << u.profile.user_id << ',' << format_double(u.log_odds) << ',' << format_double(u.z1) << ','
        << format_double(u.z2) << ',' << format_double(u.z3) << ',' << u.last_session_length << ','
        << u.profile.label.value_or(0) << '\n';
}

struct GeneratedSummary {
  double train_rate = 0.0, test_rate = 0.0, old_rate = 0.0;
  double train_oracle_auc = 0.0, test_oracle_auc = 0.0;
  double intercept = 0.0;
};

// Writes the full scenario into `dir`: taxonomy.csv; events.jsonl,
// profiles.csv, truth.csv (train); test_*; old_profiles.csv, old_truth.csv.
inline GeneratedSummary generate_scenario(const ScenarioConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + (fs::path(dir) / name).string() + "'");
    return out;
  };
  ScenarioGenerator gen(cfg);
  GeneratedSummary summary;
  summary.intercept = gen.intercept();
  {
    auto out = open("taxonomy.csv");
    write_taxonomy(out, reference_taxonomy(cfg.taxonomy));
  }
  auto emit = [&](const SynthSplit& s, const std::string& prefix, bool events) {
    if (events) {
      auto out = open(prefix + "events.jsonl");
      write_events_jsonl(out, s);
    }
    {
      auto out = open(prefix + "profiles.csv");
      write_profiles_csv(out, s, cfg.profile_dim);
    }
    auto out = open(prefix + "truth.csv");
    write_truth_csv(out, s);
  };
  {
    const auto train = gen.split("train", cfg.n_users);
    emit(train, "", true);
    summary.train_rate = train.label_rate();
    if (train.label_rate() > 0.0 && train.label_rate() < 1.0) summary.train_oracle_auc = oracle_auc(train);
  }
  {
    const auto test = gen.split("test", cfg.n_test);
    emit(test, "test_", true);
    summary.test_rate = test.label_rate();
    if (test.label_rate() > 0.0 && test.label_rate() < 1.0) summary.test_oracle_auc = oracle_auc(test);
  }
  {
    const auto old = gen.old_split();
    emit(old, "old_", false);
    summary.old_rate = old.label_rate();
  }
  return summary;
}

}  // namespace huihen
