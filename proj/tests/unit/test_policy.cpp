// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "inquiry/datagen.hpp"
#include "inquiry/policy.hpp"

using namespace inquiry;

namespace {

using LD = long double;

Mat<LD> random_phi(Rng& rng, Eigen::Index k, Eigen::Index d) {
  Mat<LD> phi(k, d);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) phi(i, j) = static_cast<LD>(2.0 * uniform01(rng) - 1.0);
  }
  return phi;
}

Vec<LD> random_vec(Rng& rng, Eigen::Index d, double scale) {
  Vec<LD> v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = static_cast<LD>(scale * (2.0 * uniform01(rng) - 1.0));
  return v;
}

template <typename F>
Vec<LD> central_difference(F&& f, const Vec<LD>& x) {
  const LD h = 1e-6L;
  Vec<LD> g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec<LD> up = x, down = x;
    up(j) += h;
    down(j) -= h;
    g(j) = (f(up) - f(down)) / (2 * h);
  }
  return g;
}

LD relative_error(const Vec<LD>& analytic, const Vec<LD>& numeric) {
  return (analytic - numeric).norm() / std::max(numeric.norm(), LD(1e-8));
}

struct Corpus {
  SchemaPtr schema = test::demo_schema();
  GenConfig gen = load_gen_config(*schema, test::data_path("demo_gen_config.json"));
  WorldModel wm = estimate_prior(schema, generate_corpus(*schema, gen, 1000, 1), 1.0);

  std::vector<PreferenceGroup> groups(std::size_t n_specs, std::uint64_t seed) const {
    DatasetConfig cfg;
    cfg.seed = seed;
    const EpsilonGreedySelector rollout(0.2, cfg.strategies, cfg.k);
    return build_dataset(wm, generate_corpus(*schema, gen, n_specs, seed), rollout, cfg).groups;
  }
};

double expected_reward(const BeliefState& belief, const Question& q) {
  double r = 0.0;
  for (const auto& id : q.targets) r += belief.marginal_entropy(belief.schema().require_index(id));
  return r;
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("log-probability examples") {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Random(8, kFeatureDim);
    const auto lp = policy_log_probs(PolicyParams::uniform(), phi);
    for (Eigen::Index i = 0; i < 8; ++i) CHECK(lp(i) == doctest::Approx(-std::log(8.0)).epsilon(1e-14));

    Mat<double> two(2, 1);
    two << 1.0, 0.0;
    Vec<double> theta(1);
    theta << 1.0;
    const auto p = group_log_probs<double>(two, theta, 1.0).array().exp().eval();
    CHECK(p(0) == doctest::Approx(0.731059).epsilon(1e-6));
    CHECK(p(1) == doctest::Approx(0.268941).epsilon(1e-6));

    theta << 30.0;
    CHECK(std::exp(group_log_probs<double>(two, theta, 1.0)(0)) >= 1.0 - 1e-9);
    theta << 1e4;
    const auto sat = group_log_probs<double>(two, theta, 1.0);
    CHECK(std::isfinite(sat(1)));
    CHECK(sat(0) == 0.0);
  }

  TEST_CASE("softmax normalization and shift invariance") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Index k = 2 + static_cast<Eigen::Index>(uniform_index(rng, 9));
      Vec<double> scores(k);
      for (Eigen::Index i = 0; i < k; ++i) scores(i) = 20.0 * (uniform01(rng) - 0.5);
      const Vec<double> lp = log_softmax<double>(scores);
      CHECK(std::abs(lp.array().exp().sum() - 1.0) < 1e-9);
      const Vec<double> shifted = log_softmax<double>((scores.array() + 123.0).matrix());
      CHECK((lp - shifted).cwiseAbs().maxCoeff() < 1e-12);
    }
    // A bias-only change shifts every candidate score equally.
    Eigen::MatrixXd phi = Eigen::MatrixXd::Random(6, kFeatureDim);
    phi.col(5).setOnes();
    PolicyParams a;
    a.theta << 0.3, -0.2, 0.1, 0.0, 0.5, 0.0;
    PolicyParams b = a;
    b.theta(5) = 7.0;
    Rng r1(0), r2(0);
    CHECK(select_index(a, phi, SelectMode::kGreedy, r1) == select_index(b, phi, SelectMode::kGreedy, r2));
    CHECK((policy_log_probs(a, phi) - policy_log_probs(b, phi)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("reference fixed point") {
    Rng rng(8);
    const auto phi = random_phi(rng, 8, kFeatureDim);
    const Mat<double> phi_d = phi.cast<double>();
    const Vec<double> theta = random_vec(rng, kFeatureDim, 1.0).cast<double>();
    const auto adv = zscore_advantages({1, 4, 2, 8, 5, 7, 3, 6});
    const Vec<double> a = Eigen::Map<const Vec<double>>(adv.data(), 8);
    const auto out = grpo_loss<double>(phi_d, a, theta, theta, theta, 0.2, 0.01);
    CHECK(out.kl == 0.0);
    CHECK(out.loss == 0.0);
    const Vec<double> p = group_log_probs<double>(phi_d, theta, 1.0).array().exp();
    const Vec<double> unclipped = -(log_prob_jacobian<double>(phi_d, p, 1.0).transpose() * a) / 8.0;
    CHECK((out.grad - unclipped).norm() < 1e-14);
  }

  TEST_CASE("clipped branch matches a hand-evaluated formula") {
    // Two candidates, pi_old uniform, pi(0) = 0.7 so rho = (1.4, 0.6) with eps = 0.2.
    Mat<double> phi(2, 1);
    phi << 1.0, 0.0;
    Vec<double> theta(1), zero = Vec<double>::Zero(1);
    theta << std::log(7.0 / 3.0);
    Vec<double> adv(2);
    adv << 1.0, -1.0;
    const double beta = 0.01;
    const auto out = grpo_loss<double>(phi, adv, theta, zero, zero, 0.2, beta);
    const double surrogate = (1.2 * 1.0 + 0.8 * -1.0) / 2.0;
    const double kl = 0.7 * std::log(0.7 / 0.5) + 0.3 * std::log(0.3 / 0.5);
    CHECK(out.loss == doctest::Approx(-(surrogate - beta * kl)).epsilon(1e-12));
    CHECK(out.kl == doctest::Approx(kl).epsilon(1e-12));
    // Both terms are clipped, so only the KL penalty contributes gradient.
    const double dkl = 0.7 * 0.3 * (std::log(0.7 / 0.5) - std::log(0.3 / 0.5));
    CHECK(out.grad(0) == doctest::Approx(beta * dkl).epsilon(1e-10));
  }

  TEST_CASE("analytic gradients match central differences") {
    Rng rng(12);
    int checked = 0;
    while (checked < 20) {
      const Eigen::Index k = 2 + static_cast<Eigen::Index>(uniform_index(rng, 7));
      const auto phi = random_phi(rng, k, kFeatureDim);
      const Vec<LD> theta = random_vec(rng, kFeatureDim, 1.0);
      const Vec<LD> old = theta + random_vec(rng, kFeatureDim, 0.3);
      const Vec<LD> ref = random_vec(rng, kFeatureDim, 1.0);
      Vec<LD> a = random_vec(rng, k, 1.0);
      a.array() -= a.mean();
      const LD eps = 0.2L;
      const Vec<LD> rho = (group_log_probs<LD>(phi, theta, 1.0L) - group_log_probs<LD>(phi, old, 1.0L)).array().exp();
      bool near_kink = false;
      for (Eigen::Index i = 0; i < k; ++i) {
        near_kink |= std::abs(rho(i) - (1 + eps)) < 1e-3L || std::abs(rho(i) - (1 - eps)) < 1e-3L;
      }
      if (near_kink) continue;
      ++checked;

      const auto grpo = grpo_loss<LD>(phi, a, theta, old, ref, eps, 0.05L);
      const auto gf = [&](const Vec<LD>& t) { return grpo_loss<LD>(phi, a, t, old, ref, eps, 0.05L).loss; };
      CHECK(static_cast<double>(relative_error(grpo.grad, central_difference(gf, theta))) < 1e-4);

      const Eigen::Index best = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(k)));
      const auto sft = sft_loss<LD>(phi, best, theta, 1.3L);
      const auto sf = [&](const Vec<LD>& t) { return sft_loss<LD>(phi, best, t, 1.3L).loss; };
      CHECK(static_cast<double>(relative_error(sft.grad, central_difference(sf, theta))) < 1e-4);

      const Eigen::Index loser = (best + 1) % k;
      const auto dpo = dpo_loss<LD>(phi, best, loser, theta, ref, 0.7L);
      const auto df = [&](const Vec<LD>& t) { return dpo_loss<LD>(phi, best, loser, t, ref, 0.7L).loss; };
      CHECK(static_cast<double>(relative_error(dpo.grad, central_difference(df, theta))) < 1e-4);
    }
  }

  TEST_CASE("baseline loss values") {
    Rng rng(2);
    const auto phi = random_phi(rng, 8, kFeatureDim);
    const Vec<LD> zero = Vec<LD>::Zero(kFeatureDim);
    CHECK(static_cast<double>(sft_loss<LD>(phi, 3, zero).loss) == doctest::Approx(2.079442).epsilon(1e-6));
    CHECK(static_cast<double>(dpo_loss<LD>(phi, 1, 2, zero, zero, 0.1L).loss) ==
          doctest::Approx(0.693147).epsilon(1e-6));

    Mat<LD> two(2, 1);
    two << 1, 0;
    Vec<LD> big(1);
    big << 60;
    CHECK(sft_loss<LD>(two, 0, big).loss < 1e-20L);
    const Vec<LD> zero1 = Vec<LD>::Zero(1);
    big << 1e4;
    CHECK(dpo_loss<LD>(two, 0, 1, big, zero1, 0.1L).loss < 1e-20L);
    CHECK_THROWS_AS(sft_loss<LD>(Mat<LD>(0, 1), 0, zero1), ValidationError);
    CHECK_THROWS_AS(dpo_loss<LD>(two, 0, 0, zero1, zero1, 0.1L), ValidationError);
  }

  TEST_CASE("selection") {
    const auto schema = test::demo_schema();
    const auto belief = init_belief(test::uniform_model(schema));
    Rng rng(1);
    const auto set = generate_candidates(belief, StrategyMix{}, 8, rng);
    Rng r(0);
    CHECK(select_question(PolicyParams::uniform(), belief, set, SelectMode::kGreedy, r).text == set.candidates[0].text);

    Rng s1(77), s2(77);
    for (int i = 0; i < 10; ++i) {
      CHECK(select_question(PolicyParams::uniform(), belief, set, SelectMode::kSample, s1).text ==
            select_question(PolicyParams::uniform(), belief, set, SelectMode::kSample, s2).text);
    }
    CHECK_THROWS_AS(select_question(PolicyParams::uniform(), belief, CandidateSet{}, SelectMode::kGreedy, r),
                    ValidationError);
  }

  TEST_CASE("policy files round-trip") {
    PolicyParams p;
    p.theta << 1.5, -0.25, 3.0, 0.0, -2.0, 0.125;
    p.temperature = 0.5;
    p.trained_with = TrainedWith{"grpo-offline", "entropy", 9, 5};
    const auto text = serialize_policy(p);
    const auto back = parse_policy(text);
    CHECK(back.theta == p.theta);
    CHECK(back.temperature == 0.5);
    CHECK(serialize_policy(back) == text);
    CHECK_THROWS_AS(parse_policy(R"({"theta":[1,2],"temperature":1,"feature_version":"v1"})"), ValidationError);
    CHECK_THROWS_AS(parse_policy(R"({"theta":[0,0,0,0,0,0],"temperature":0,"feature_version":"v1"})"),
                    ValidationError);
  }

  TEST_CASE("training effects") {
    const Corpus c;
    const auto train_set = c.groups(60, 21);
    const auto held_out = c.groups(30, 22);
    REQUIRE(train_set.size() >= 400);

    TrainConfig sft;
    sft.method = TrainMethod::kSft;
    sft.seed = 1;
    const auto s = train(train_set, sft, held_out);
    CHECK(s.log.back().top1_agreement > 0.9);

    TrainConfig grpo;
    grpo.seed = 1;
    const auto g = train(train_set, grpo, held_out);
    REQUIRE(g.log.size() == 6);
    CHECK(g.log.back().top1_agreement > g.log.front().top1_agreement);
    const auto again = train(train_set, grpo, held_out);
    CHECK(again.params.theta == g.params.theta);
    CHECK(serialize_training_log(again.log) == serialize_training_log(g.log));
    CHECK(serialize_training_log(g.log).rfind("epoch,loss,kl_term,top1_agreement\n", 0) == 0);

    TrainConfig dpo;
    dpo.method = TrainMethod::kDpo;
    const auto d = train(train_set, dpo, held_out);
    CHECK(d.log.back().loss < d.log.front().loss);
    std::size_t constant = 0;
    for (const auto& g : train_set) {
      constant += std::all_of(g.rewards.begin(), g.rewards.end(), [&](double r) { return r == g.rewards[0]; });
    }
    CHECK(d.skipped_groups == constant);

    TrainConfig slot = grpo;
    slot.reward_mode = RewardMode::kSlotCount;
    const auto sc = train(train_set, slot, held_out);

    // Probe: one uniform 4-value attribute (2 bits) against three skewed
    // binaries (about 0.29 bits each).
    const auto probe_schema = test::sized_schema({4, 2, 2, 2});
    Eigen::VectorXd skew(2);
    skew << 0.95, 0.05;
    const auto probe = init_belief(make_world_model(probe_schema, {Eigen::VectorXd::Constant(4, 0.25), skew, skew, skew}));
    CandidateSet probe_set;
    probe_set.candidates = {make_question(*probe_schema, {"a0"}), make_question(*probe_schema, {"a1", "a2", "a3"})};
    CHECK(expected_reward(probe, probe_set.candidates[0]) > expected_reward(probe, probe_set.candidates[1]));
    Rng r(0);
    CHECK(select_question(sc.params, probe, probe_set, SelectMode::kGreedy, r).targets.size() == 3);
    CHECK(select_question(g.params, probe, probe_set, SelectMode::kGreedy, r).targets.size() == 1);

    // On fresh demo beliefs the trained policy picks the highest-reward candidate.
    const auto fresh = init_belief(c.wm);
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng cand(seed);
      const auto set = generate_candidates(fresh, StrategyMix{}, 8, cand);
      double best = 0.0;
      for (const auto& q : set.candidates) best = std::max(best, expected_reward(fresh, q));
      const auto chosen = select_question(g.params, fresh, set, SelectMode::kGreedy, r);
      hits += expected_reward(fresh, chosen) >= best - 1e-12;
    }
    CHECK(hits >= 45);
  }

  TEST_CASE("divergence guard") {
    const Corpus c;
    const auto data = c.groups(5, 3);
    TrainConfig cfg;
    cfg.method = TrainMethod::kSft;
    cfg.learning_rate = 1e307;
    CHECK_THROWS_AS(train(data, cfg), DivergenceError);
  }

  TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.learning_rate = -1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = TrainConfig{};
    cfg.clip_epsilon = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK_THROWS_AS(train({}, TrainConfig{}), ValidationError);
  }
}
