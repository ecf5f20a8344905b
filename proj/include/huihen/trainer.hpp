// Minibatch training of a Model: per-sample tapes, gradients summed in sample
// order, optional global-norm clipping, bias-corrected Adam.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <tuple>
#include <span>
#include <string>
#include <vector>

#include "huihen/adam.hpp"
#include "huihen/metrics.hpp"
#include "huihen/network.hpp"

namespace huihen {

enum class LossMode { kPlainCe, kCePlusSymKl };

struct TrainOptions {
  AdamConfig adam;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  bool strict = false;  // disables clipping
  double class_weight = 1.0;
  double dropout_keep = 0.6;
  bool freeze_upi = false;
  LossMode loss = LossMode::kPlainCe;
  bool profile_only = false;  // zero-filled sequence slots
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double auc = 0.0;
  double ks = 0.0;
};

struct EvalResult {
  double loss = 0.0;
  double auc = 0.0;
  double ks = 0.0;
  std::size_t n = 0;
  std::vector<double> scores;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Per label class, a seeded shuffle sends round(fraction * n_class) to val.
inline SplitIndices stratified_split(std::span<const int> labels, double val_fraction, std::uint64_t seed) {
  SplitIndices out;
  Rng rng(derive_seed(seed, "split"));
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    rng.shuffle(std::span<std::size_t>(idx));
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
    out.val.insert(out.val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

inline void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> rows) {
  out << "epoch,split,loss,auc,ks\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << r.split << ',' << format_double(r.loss) << ',' << format_double(r.auc) << ','
        << format_double(r.ks) << '\n';
}

namespace detail {

inline std::pair<double, double> auc_ks(std::span<const double> scores, std::span<const Example> data) {
  std::vector<ScoredSample> s;
  s.reserve(scores.size());
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s.push_back({scores[i], data[i].label});
    pos |= data[i].label == 1;
    neg |= data[i].label == 0;
  }
  if (!pos || !neg) return {std::nan(""), std::nan("")};
  return {auc(s), ks(s)};
}

}  // namespace detail

template <class Real>
class Trainer {
 public:
  Trainer(Model<Real>& model, TrainOptions opts) : model_(model), opts_(opts) {
    const auto& params = model_.params();
    grads_.resize(params.size());
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      grads_[i].assign(params[i].value.size(), Real(0));
      m_[i].assign(params[i].value.size(), Real(0));
      v_[i].assign(params[i].value.size(), Real(0));
    }
  }

  // Optional hook called after each epoch's metrics are recorded.
  std::function<void(const EpochMetrics&)> on_epoch;

  std::vector<EpochMetrics> fit(std::span<const Example> train, std::span<const Example> val) {
    std::vector<EpochMetrics> log;
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t batch = std::max<std::size_t>(opts_.batch_size, 1);
    for (std::size_t epoch = 1; epoch <= opts_.epochs; ++epoch) {
      Rng shuffle_rng(derive_seed(derive_seed(opts_.seed, "shuffle"), epoch));
      shuffle_rng.shuffle(std::span<std::size_t>(order));
      Rng dropout_rng(derive_seed(derive_seed(opts_.seed, "dropout"), epoch));
      const DropoutSpec dropout{opts_.dropout_keep, &dropout_rng};

      std::vector<double> scores(train.size());
      double loss_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t end = std::min(order.size(), start + batch);
        for (auto& g : grads_) std::fill(g.begin(), g.end(), Real(0));
        double batch_loss = 0.0;
        const std::size_t batch_id = start / batch;
        try {
          for (std::size_t k = start; k < end; ++k) {
            const Example& ex = train[order[k]];
            const auto [loss, prob] = accumulate(ex, &dropout);
            batch_loss += loss;
            scores[order[k]] = prob;
          }
        } catch (const NonFiniteError& e) {
          throw Error("training diverged in epoch " + std::to_string(epoch) + ", batch " +
                      std::to_string(batch_id) + ": " + e.what());
        }
        if (!std::isfinite(batch_loss))
          throw Error("training diverged in epoch " + std::to_string(epoch) + ", batch " +
                      std::to_string(batch_id) + ": non-finite loss");
        step_losses_.push_back(batch_loss / static_cast<double>(end - start));
        loss_sum += batch_loss;
        apply_update(end - start, batch_id, epoch);
      }
      EpochMetrics tr;
      tr.epoch = epoch;
      tr.split = "train";
      tr.loss = train.empty() ? 0.0 : loss_sum / static_cast<double>(train.size());
      std::tie(tr.auc, tr.ks) = detail::auc_ks(scores, train);
      log.push_back(tr);
      if (on_epoch) on_epoch(tr);
      if (!val.empty()) {
        const auto ev = evaluate(val);
        EpochMetrics vm{epoch, "val", ev.loss, ev.auc, ev.ks};
        log.push_back(vm);
        if (on_epoch) on_epoch(vm);
      }
    }
    return log;
  }

  // Deterministic scoring (dropout off) with mean cross-entropy on labeled rows.
  EvalResult evaluate(std::span<const Example> data) const { return evaluate_model(model_, data, opts_.profile_only); }

  static EvalResult evaluate_model(const Model<Real>& model, std::span<const Example> data, bool profile_only) {
    EvalResult r;
    Tape<Real> tape;
    r.scores.reserve(data.size());
    double loss = 0.0;
    std::size_t labeled = 0;
    for (const auto& ex : data) {
      tape.clear();
      const ModelVars mv = model.bind(tape);
      const UpiOutput out = profile_only ? model.forward_profile(tape, mv, ex, nullptr)
                                         : model.forward(tape, mv, ex, nullptr);
      const double p = static_cast<double>(tape.scalar(out.prob));
      r.scores.push_back(p);
      if (ex.label >= 0) {
        loss += cross_entropy(p, ex.label, model.spec().clamp_eps);
        ++labeled;
      }
    }
    r.n = data.size();
    r.loss = labeled ? loss / static_cast<double>(labeled) : 0.0;
    std::tie(r.auc, r.ks) = detail::auc_ks(r.scores, data);
    return r;
  }

  const std::vector<double>& step_losses() const { return step_losses_; }
  std::uint64_t steps() const { return step_; }

 private:
  std::pair<double, double> accumulate(const Example& ex, const DropoutSpec* dropout) {
    if (ex.label < 0) throw Error("training example " + ex.user_id + " is unlabeled");
    tape_.clear();
    const ModelVars mv = model_.bind(tape_);
    const UpiOutput out = opts_.profile_only ? model_.forward_profile(tape_, mv, ex, dropout)
                                             : model_.forward(tape_, mv, ex, dropout);
    Var loss;
    if (opts_.loss == LossMode::kCePlusSymKl) {
      if (!std::isfinite(ex.teacher_q))
        throw Error("teacher guidance is on but user " + ex.user_id + " has no guidance probability");
      loss = aux_loss(tape_, out.prob, ex.teacher_q, static_cast<double>(ex.label), mv.alpha_raw,
                      model_.spec().clamp_eps);
    } else {
      loss = cross_entropy(tape_, out.prob, static_cast<double>(ex.label));
    }
    if (ex.label == 1 && opts_.class_weight != 1.0)
      loss = tape_.scale(loss, static_cast<Real>(opts_.class_weight));
    tape_.backward(loss);
    const auto& params = model_.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto g = tape_.grad(mv.by_index[i]);
      auto& acc = grads_[i];
      for (std::size_t k = 0; k < g.size(); ++k) acc[k] += g[k];
    }
    return {static_cast<double>(tape_.scalar(loss)), static_cast<double>(tape_.scalar(out.prob))};
  }

  void apply_update(std::size_t n, std::size_t batch_id, std::size_t epoch) {
    auto& params = model_.params();
    const Real inv = Real(1) / static_cast<Real>(n);
    double norm2 = 0.0;
    for (auto& g : grads_)
      for (auto& x : g) {
        x *= inv;
        norm2 += static_cast<double>(x) * static_cast<double>(x);
      }
    if (!std::isfinite(norm2))
      throw Error("training diverged in epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_id) +
                  ": non-finite gradient");
    const double norm = std::sqrt(norm2);
    if (!opts_.strict && opts_.clip_norm > 0.0 && norm > opts_.clip_norm) {
      const auto s = static_cast<Real>(opts_.clip_norm / norm);
      for (auto& g : grads_)
        for (auto& x : g) x *= s;
    }
    ++step_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (opts_.freeze_upi && is_upi_array(params[i].name)) continue;
      adam_step<Real>(params[i].value, grads_[i], m_[i], v_[i], step_, opts_.adam);
    }
  }

  Model<Real>& model_;
  TrainOptions opts_;
  Tape<Real> tape_;
  std::vector<std::vector<Real>> grads_, m_, v_;
  std::vector<double> step_losses_;
  std::uint64_t step_ = 0;
};

}  // namespace huihen
