// huihen: command-line driver for data generation, training and evaluation.
//
// Every command accepts --config FILE, --seed N and repeatable --set key=value
// (applied in that order over the built-in defaults). Progress goes to stderr,
// controlled by HUIHEN_LOG=quiet|info|debug; the final summary goes to stdout.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "huihen/gradient_suite.hpp"
#include "huihen/pipeline.hpp"

namespace {

using namespace huihen;

enum class LogLevel { kQuiet, kInfo, kDebug };

LogLevel log_level() {
  const char* env = std::getenv("HUIHEN_LOG");
  if (!env) return LogLevel::kInfo;
  const std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::kQuiet;
  if (v == "debug" || v == "2") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void info(const std::string& msg) {
  if (log_level() != LogLevel::kQuiet) std::cerr << "[huihen] " << msg << '\n';
}

void debug(const std::string& msg) {
  if (log_level() == LogLevel::kDebug) std::cerr << "[huihen:debug] " << msg << '\n';
}

EpochHook epoch_logger() {
  return [](const EpochMetrics& m) {
    info("epoch " + std::to_string(m.epoch) + " " + m.split + " loss=" + format_double(m.loss) +
         " auc=" + format_double(m.auc) + " ks=" + format_double(m.ks));
  };
}

struct Common {
  std::string config_path;
  std::int64_t seed = 0;
  bool seed_given = false;
  std::vector<std::string> overrides;

  Config resolve() const {
    Config c = Config::defaults();
    if (!config_path.empty()) c.merge_file(config_path);
    if (seed_given) {
      c.set("train.seed", std::to_string(seed));
      c.set("synth.seed", std::to_string(seed));
    }
    for (const auto& o : overrides) c.set(o);
    debug("config " + c.to_json().dump());
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option_function<std::int64_t>(
      "--seed",
      [&common](const std::int64_t& s) {
        common.seed = s;
        common.seed_given = true;
      },
      "Seed for training and generation");
  cmd->add_option("--set", common.overrides, "Override key=value (repeatable)");
}

std::ofstream open_out(const std::string& path) {
  if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

void write_metrics_file(const std::string& path, const std::vector<EpochMetrics>& rows) {
  if (path.empty()) return;
  auto out = open_out(path);
  write_metrics_csv(out, rows);
}

void write_scores(const std::string& path, std::span<const ProfileRecord> records, const std::vector<double>& scores) {
  auto out = open_out(path);
  out << "user_id,probability\n";
  for (std::size_t i = 0; i < records.size(); ++i) out << records[i].user_id << ',' << format_double(scores[i]) << '\n';
}

CheckpointFormat format_of(bool text) { return text ? CheckpointFormat::kText : CheckpointFormat::kBinary; }

template <class Real>
std::string val_summary(const TrainRun<Real>& run) {
  return "val_auc=" + format_double(run.val.auc) + " val_ks=" + format_double(run.val.ks);
}

// Runs `fn.template operator()<Real>()` at the configured precision.
template <class F>
void at_precision(const Config& c, F&& fn) {
  if (precision_bits(c) == 32)
    fn.template operator()<float>();
  else
    fn.template operator()<double>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HUIHEN hierarchical behavior-sequence model for loan overdue risk"};
  app.require_subcommand(1);

  Common common;

  // gen-data
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic scenario (train, test, old data)");
  add_common(gen, common);
  gen->add_option("--out", gen_out, "Output directory")->required();

  // teacher
  std::string teacher_profiles, teacher_out;
  auto* teacher = app.add_subcommand("teacher", "Fit the built-in logistic teacher and write guidance probabilities");
  add_common(teacher, common);
  teacher->add_option("--profiles", teacher_profiles, "Labeled profile CSV")->required()->check(CLI::ExistingFile);
  teacher->add_option("--out", teacher_out, "Output CSV user_id,probability")->required();

  // pretrain
  std::string pre_profiles, pre_teacher, pre_out, pre_metrics;
  bool pre_text = false;
  auto* pre = app.add_subcommand("pretrain", "Train the profile path and fusion head on old data");
  add_common(pre, common);
  pre->add_option("--profiles", pre_profiles, "Old-data profile CSV")->required()->check(CLI::ExistingFile);
  pre->add_option("--teacher", pre_teacher, "Guidance CSV (default: built-in teacher)")->check(CLI::ExistingFile);
  pre->add_option("--out", pre_out, "Checkpoint path")->required();
  pre->add_option("--metrics", pre_metrics, "Metrics CSV path");
  pre->add_flag("--text", pre_text, "Write the checkpoint in text form");

  // train
  std::string tr_taxonomy, tr_profiles, tr_events, tr_init, tr_out, tr_metrics;
  bool tr_text = false;
  auto* tr = app.add_subcommand("train", "Train the full network on new data");
  add_common(tr, common);
  tr->add_option("--taxonomy", tr_taxonomy, "Taxonomy CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--profiles", tr_profiles, "Profile CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--events", tr_events, "Events JSONL")->required()->check(CLI::ExistingFile);
  tr->add_option("--init", tr_init, "Pretrain checkpoint")->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--metrics", tr_metrics, "Metrics CSV path");
  tr->add_flag("--text", tr_text, "Write the checkpoint in text form");

  // eval / score
  std::string ev_ck, ev_profiles, ev_events, ev_out;
  auto* ev = app.add_subcommand("eval", "AUC and KS of a checkpoint on labeled data");
  add_common(ev, common);
  ev->add_option("--checkpoint", ev_ck, "Checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--profiles", ev_profiles, "Profile CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--events", ev_events, "Events JSONL")->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "Metrics CSV path")->required();

  std::string sc_ck, sc_profiles, sc_events, sc_out;
  auto* sc = app.add_subcommand("score", "Overdue probabilities for (possibly unlabeled) profiles");
  add_common(sc, common);
  sc->add_option("--checkpoint", sc_ck, "Checkpoint")->required()->check(CLI::ExistingFile);
  sc->add_option("--profiles", sc_profiles, "Profile CSV")->required()->check(CLI::ExistingFile);
  sc->add_option("--events", sc_events, "Events JSONL")->check(CLI::ExistingFile);
  sc->add_option("--out", sc_out, "Output CSV user_id,probability")->required();

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks for every component");
  add_common(gc, common);

  // ablate
  std::string ab_taxonomy, ab_profiles, ab_events, ab_old, ab_teacher, ab_test_profiles, ab_test_events, ab_out;
  auto* ab = app.add_subcommand("ablate", "Train and compare the five model variants");
  add_common(ab, common);
  ab->add_option("--taxonomy", ab_taxonomy, "Taxonomy CSV")->required()->check(CLI::ExistingFile);
  ab->add_option("--profiles", ab_profiles, "Profile CSV")->required()->check(CLI::ExistingFile);
  ab->add_option("--events", ab_events, "Events JSONL")->required()->check(CLI::ExistingFile);
  ab->add_option("--old-profiles", ab_old, "Old-data profile CSV")->required()->check(CLI::ExistingFile);
  ab->add_option("--teacher", ab_teacher, "Guidance CSV for the old data")->check(CLI::ExistingFile);
  ab->add_option("--test-profiles", ab_test_profiles, "Held-out profile CSV")->check(CLI::ExistingFile);
  ab->add_option("--test-events", ab_test_events, "Held-out events JSONL")->check(CLI::ExistingFile);
  ab->add_option("--out", ab_out, "Result table CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = common.resolve();

    if (*gen) {
      const auto s = generate_scenario(scenario_config(cfg), gen_out);
      std::cout << "out=" << gen_out << " train_rate=" << format_double(s.train_rate)
                << " test_rate=" << format_double(s.test_rate) << " old_rate=" << format_double(s.old_rate)
                << " train_oracle_auc=" << format_double(s.train_oracle_auc)
                << " test_oracle_auc=" << format_double(s.test_oracle_auc) << '\n';
    } else if (*teacher) {
      const auto table = ingest_profiles_file(teacher_profiles, {}, label_polarity(cfg));
      const auto rows = builtin_teacher(table.records, teacher_config(cfg));
      auto out = open_out(teacher_out);
      write_teacher(out, rows);
      std::cout << "out=" << teacher_out << " rows=" << rows.size() << '\n';
    } else if (*pre) {
      const auto table = ingest_profiles_file(pre_profiles, {}, label_polarity(cfg));
      std::map<std::string, double> guidance;
      if (!pre_teacher.empty()) guidance = read_teacher_file(pre_teacher);
      at_precision(cfg, [&]<class Real>() {
        auto run = pretrain<Real>(cfg, table.records, pre_teacher.empty() ? nullptr : &guidance, epoch_logger());
        save_checkpoint_file(run.model.to_checkpoint(), pre_out, format_of(pre_text));
        write_metrics_file(pre_metrics, run.metrics);
        std::cout << "checkpoint=" << pre_out << " stage=pretrain teacher=" << run.model.meta().at("teacher") << ' '
                  << val_summary(run) << '\n';
      });
    } else if (*tr) {
      const auto data = load_behavior_data(cfg, tr_taxonomy, tr_profiles, tr_events);
      info("events: " + std::to_string(data.events.events) + " ingested, " + std::to_string(data.events.malformed) +
           " malformed, " + std::to_string(data.events.unknown_codes) + " unknown codes");
      std::optional<Checkpoint> init;
      if (!tr_init.empty()) {
        init = load_checkpoint_file(tr_init);
      } else if (cfg.get_bool("train.aux_pretrain")) {
        throw ConfigError(
            "config key 'train.aux_pretrain' is on but no --init checkpoint was given "
            "(pass --init or --set train.aux_pretrain=off)");
      }
      at_precision(cfg, [&]<class Real>() {
        auto run = train_full<Real>(cfg, data, init ? &*init : nullptr, epoch_logger());
        save_checkpoint_file(run.model.to_checkpoint(), tr_out, format_of(tr_text));
        write_metrics_file(tr_metrics, run.metrics);
        std::cout << "checkpoint=" << tr_out << " stage=full upi_init=" << run.model.meta().at("upi.init") << ' '
                  << val_summary(run) << '\n';
      });
    } else if (*ev || *sc) {
      const bool is_eval = ev->parsed();
      const auto ck = load_checkpoint_file(is_eval ? ev_ck : sc_ck);
      const auto table = ingest_profiles_file(is_eval ? ev_profiles : sc_profiles, {}, label_polarity(cfg));
      const auto& events = is_eval ? ev_events : sc_events;
      auto run_eval = [&]<class Real>() {
        const auto model = Model<Real>::from_checkpoint(ck);
        const auto r = evaluate_records(model, ck, table.records, events, cfg);
        if (is_eval) {
          if (std::isnan(r.auc)) throw Error("eval: AUC undefined (labels are missing or single-class)");
          auto out = open_out(ev_out);
          out << "n,loss,auc,ks\n"
              << r.n << ',' << format_double(r.loss) << ',' << format_double(r.auc) << ',' << format_double(r.ks)
              << '\n';
          std::cout << "auc=" << format_double(r.auc) << " ks=" << format_double(r.ks) << '\n';
        } else {
          write_scores(sc_out, table.records, r.scores);
          std::cout << "out=" << sc_out << " rows=" << r.n << '\n';
        }
      };
      at_precision(cfg, run_eval);
    } else if (*gc) {
      GradCheckOptions opts;
      opts.step = cfg.get_double("gradcheck.step");
      opts.tolerance = cfg.get_double("gradcheck.tolerance");
      const auto reports = run_gradient_suite(static_cast<std::size_t>(cfg.get_int("gradcheck.instances")), opts,
                                              static_cast<std::uint64_t>(cfg.get_int("train.seed")));
      bool ok = true;
      for (const auto& r : reports) {
        ok &= r.passed;
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.component << " instances=" << r.instances
                  << " max_rel_error=" << format_double(r.max_rel_error) << '\n';
      }
      std::cout << "gradcheck=" << (ok ? "pass" : "fail") << '\n';
      return ok ? 0 : 1;
    } else if (*ab) {
      const auto data = load_behavior_data(cfg, ab_taxonomy, ab_profiles, ab_events);
      const auto old = ingest_profiles_file(ab_old, {}, label_polarity(cfg));
      std::map<std::string, double> guidance;
      if (!ab_teacher.empty()) guidance = read_teacher_file(ab_teacher);
      ProfileTable test;
      if (!ab_test_profiles.empty()) test = ingest_profiles_file(ab_test_profiles, {}, label_polarity(cfg));
      at_precision(cfg, [&]<class Real>() {
        const auto rows = run_ablation<Real>(cfg, data, old.records, ab_teacher.empty() ? nullptr : &guidance,
                                             test.records, ab_test_events, ablation_variants(), epoch_logger());
        auto out = open_out(ab_out);
        write_ablation_csv(out, rows);
        write_ablation_csv(std::cout, rows);
      });
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
