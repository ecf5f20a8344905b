#include <gtest/gtest.h>

#include <cmath>

#include "cell_instances.hpp"
#include "huihen/upi_head.hpp"

using namespace huihen;
using cells::vec_var;
using oracle::Mat;
using oracle::Vec;

namespace {

struct Head {
  std::vector<Mat> w;
  std::vector<Vec> b;
  Vec alpha;
};

Head random_head(Rng& rng, std::size_t in, const std::vector<std::size_t>& widths) {
  Head h;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    h.w.push_back(cells::rand_mat(rng, widths[l], l == 0 ? in : widths[l - 1], 0.6));
    h.b.push_back(cells::rand_vec(rng, widths[l], 0.3));
    if (l + 1 < widths.size()) h.alpha.push_back(rng.uniform(0.0, 1.0));
  }
  return h;
}

UpiVars bind(Tape<double>& t, const Head& h) {
  UpiVars v;
  for (std::size_t l = 0; l < h.w.size(); ++l) {
    v.w.push_back(cells::mat_var(t, h.w[l]));
    v.b.push_back(vec_var(t, h.b[l]));
  }
  for (double a : h.alpha) v.alpha.push_back(t.scalar_constant(a));
  return v;
}

double tape_prob(const Head& h, const Vec& tm, const Vec& hm, const Vec& pf, const DropoutSpec* d = nullptr) {
  Tape<double> t;
  const auto v = bind(t, h);
  return t.scalar(fuse_and_score(t, v, vec_var(t, tm), vec_var(t, hm), vec_var(t, pf), d, 1e-7).prob);
}

}  // namespace

TEST(Prelu, Branches) {
  EXPECT_EQ(prelu(3.0, 0.5), 3.0);
  EXPECT_EQ(prelu(-2.0, 0.5), -1.0);
  EXPECT_EQ(prelu(0.0, 0.9), 0.0);
}

TEST(Prelu, TapeMatchesScalar) {
  Tape<double> t;
  const std::vector<double> x{-2.0, 3.0};
  Var y = t.prelu(t.constant(x), t.scalar_constant(0.5));
  EXPECT_EQ(t.value(y)[0], -1.0);
  EXPECT_EQ(t.value(y)[1], 3.0);
}

TEST(CrossEntropy, ReferenceValues) {
  EXPECT_NEAR(cross_entropy(0.5, 1), 0.6931471805599453, 1e-15);
  EXPECT_NEAR(cross_entropy(0.9, 0), 2.302585092994046, 1e-12);
  EXPECT_NEAR(cross_entropy(1.0 - 1e-7, 1), 0.0, 1e-6);
}

TEST(CrossEntropy, TapeMatchesScalar) {
  for (double p : {0.1, 0.5, 0.73}) {
    for (int y : {0, 1}) {
      Tape<double> t;
      Var v = t.scalar_constant(p);
      EXPECT_NEAR(t.scalar(cross_entropy(t, v, y)), cross_entropy(p, y), 1e-15);
    }
  }
}

TEST(AuxLoss, EqualProbabilitiesReduceToCe) {
  EXPECT_NEAR(aux_loss(0.3, 0.3, 1, 1.0), cross_entropy(0.3, 1), 1e-15);
}

TEST(AuxLoss, SymmetricKlValue) {
  // Independent evaluation: each KL direction written out term by term.
  const double p = 0.9, q = 0.6;
  const double kl_pq = p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q));
  const double kl_qp = q * std::log(q / p) + (1 - q) * std::log((1 - q) / (1 - p));
  EXPECT_NEAR((kl_pq + kl_qp) / 2.0, 0.26876, 1e-5);
  EXPECT_NEAR(aux_loss(p, q, 1, 1.0) - cross_entropy(p, 1), (kl_pq + kl_qp) / 2.0, 1e-14);
}

TEST(AuxLoss, ZeroWeightIsPlainCe) { EXPECT_EQ(aux_loss(0.8, 0.2, 0, 0.0), cross_entropy(0.8, 0)); }

TEST(AuxLoss, TapeMatchesScalarWithSoftplusWeight) {
  for (double raw : {-1.0, 0.0, inverse_softplus(1.0), 2.0}) {
    Tape<double> t;
    Var p = t.scalar_constant(0.9);
    Var a = t.scalar_constant(raw);
    EXPECT_NEAR(t.scalar(aux_loss(t, p, 0.6, 1.0, a, 1e-7)), aux_loss(0.9, 0.6, 1, softplus(raw)), 1e-14);
  }
  EXPECT_NEAR(softplus(inverse_softplus(1.0)), 1.0, 1e-15);
}

TEST(AuxLoss, TeacherEqualToLabelUsesClampedTarget) {
  const double eps = 1e-7;
  for (double p : {0.2, 0.6}) {
    const double qc = clamp_probability(1.0, eps);
    const double sym = bernoulli_kl(p, qc) + bernoulli_kl(qc, p);
    EXPECT_NEAR(aux_loss(p, 1.0, 1, 0.7, eps), cross_entropy(p, 1) + 0.35 * sym, 1e-12);
  }
}

TEST(UpiHead, ZeroParamsGiveHalf) {
  Rng rng(1);
  auto h = random_head(rng, 7, {5, 2});
  for (auto& m : h.w) std::fill(m.data.begin(), m.data.end(), 0.0);
  for (auto& b : h.b) std::fill(b.begin(), b.end(), 0.0);
  EXPECT_EQ(tape_prob(h, Vec(2, 1.0), Vec(2, -1.0), Vec(3, 2.0)), 0.5);
}

TEST(UpiHead, MatchesLayerOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(5), p = 1 + rng.below(6);
    const auto h = random_head(rng, 2 * n + p, {1 + rng.below(8), 1 + rng.below(6), 2});
    const auto tm = cells::rand_vec(rng, n), hm = cells::rand_vec(rng, n), pf = cells::rand_vec(rng, p);
    ASSERT_NEAR(tape_prob(h, tm, hm, pf), oracle::upi_probability(h.w, h.b, h.alpha, tm, hm, pf, 1e-7), 1e-13);
  }
}

TEST(UpiHead, ZeroSequenceSlotsDependOnlyOnProfile) {
  Rng rng(3);
  const std::size_t n = 4, p = 3;
  auto h = random_head(rng, 2 * n + p, {6, 2});
  const auto pf = cells::rand_vec(rng, p);
  const double base = tape_prob(h, Vec(n, 0.0), Vec(n, 0.0), pf);
  // Changing the sequence columns of the first layer cannot matter.
  for (std::size_t i = 0; i < h.w[0].rows; ++i)
    for (std::size_t j = 0; j < 2 * n; ++j) h.w[0].data[i * h.w[0].cols + j] = rng.normal();
  EXPECT_EQ(tape_prob(h, Vec(n, 0.0), Vec(n, 0.0), pf), base);
}

TEST(UpiHead, ProbabilityClamped) {
  Rng rng(4);
  auto h = random_head(rng, 3, {2});
  h.w[0].data = {0, 0, 0, 0, 0, 0};
  h.b[0] = {-100.0, 100.0};
  EXPECT_EQ(tape_prob(h, {0}, {0}, {0}), 1.0 - 1e-7);
}

TEST(UpiHead, InvertedDropoutPreservesExpectation) {
  // With a linear (alpha = 1) hidden layer the mean over masks equals the
  // dropout-free pre-sigmoid output; compare logits directly.
  Rng rng(5);
  auto h = random_head(rng, 5, {40, 2});
  h.alpha = {1.0};
  const Vec tm{0.3, -0.2}, hm{0.1, 0.5}, pf{1.0};
  auto logit = [&](const DropoutSpec* d) {
    Tape<double> t;
    const auto v = bind(t, h);
    return t.scalar(fuse_and_score(t, v, vec_var(t, tm), vec_var(t, hm), vec_var(t, pf), d, 1e-7).logit);
  };
  const double clean = logit(nullptr);
  Rng mask_rng(6);
  const DropoutSpec spec{0.6, &mask_rng};
  double mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += logit(&spec);
  mean /= n;
  EXPECT_NEAR(mean, clean, 0.05 * std::max(1.0, std::abs(clean)));
}

TEST(UpiHead, KeepOneIsDeterministic) {
  Rng rng(7);
  const auto h = random_head(rng, 5, {6, 2});
  Rng mask_rng(8);
  const DropoutSpec spec{1.0, &mask_rng};
  EXPECT_EQ(tape_prob(h, {1, 2}, {3, 4}, {5}, &spec), tape_prob(h, {1, 2}, {3, 4}, {5}));
}
