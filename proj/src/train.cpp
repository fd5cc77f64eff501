// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <numeric>

#include "inquiry/policy.hpp"

namespace inquiry {

void TrainConfig::validate() const {
  if (epochs == 0) throw ValidationError("training needs at least one epoch");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be positive");
  }
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ValidationError("clip epsilon must lie in (0, 1)");
  if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw ValidationError("KL beta must be nonnegative");
  if (!(dpo_beta > 0.0) || !std::isfinite(dpo_beta)) throw ValidationError("DPO beta must be positive");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  if (method == TrainMethod::kGrpoOnline) {
    if (online.world_model == nullptr) throw ValidationError("online GRPO needs a world model");
    if (online.specs.empty()) throw ValidationError("online GRPO needs training specifications");
    if (online.inner_steps == 0) throw ValidationError("online GRPO needs at least one inner step");
    online.persona.validate();
  }
}

LossGrad<double> batch_objective(TrainMethod method, const std::vector<FeatureGroup>& groups,
                                 const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_old,
                                 const Eigen::VectorXd& theta_ref, const TrainConfig& config,
                                 std::size_t* skipped) {
  LossGrad<double> total;
  total.grad = Eigen::VectorXd::Zero(theta.size());
  std::size_t used = 0;
  std::size_t skip = 0;
  const double t = config.temperature;
  for (const auto& g : groups) {
    LossGrad<double> part;
    switch (method) {
      case TrainMethod::kGrpoOffline:
      case TrainMethod::kGrpoOnline:
        part = grpo_loss<double>(g.phi, g.advantages, theta, theta_old, theta_ref, config.clip_epsilon,
                                 config.kl_beta, t);
        break;
      case TrainMethod::kSft: {
        if (g.constant) {
          ++skip;
          continue;
        }
        part = sft_loss<double>(g.phi, g.best, theta, t);
        const Eigen::VectorXd logp = group_log_probs<double>(g.phi, theta, t);
        part.kl = group_kl<double>(logp, group_log_probs<double>(g.phi, theta_ref, t));
        break;
      }
      case TrainMethod::kDpo:
        if (g.constant) {
          ++skip;
          continue;
        }
        part = dpo_loss<double>(g.phi, g.best, g.worst, theta, theta_ref, config.dpo_beta, t);
        break;
    }
    total.loss += part.loss;
    total.kl += part.kl;
    total.grad += part.grad;
    ++used;
  }
  if (skipped != nullptr) *skipped = skip;
  if (used > 0) {
    total.loss /= static_cast<double>(used);
    total.kl /= static_cast<double>(used);
    total.grad /= static_cast<double>(used);
  }
  return total;
}

namespace {

void guard(const LossGrad<double>& step, const Eigen::VectorXd& theta, std::size_t epoch,
           const std::string& method) {
  if (std::isfinite(step.loss) && step.grad.allFinite() && theta.allFinite()) return;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s diverged at epoch %zu: loss=%g |grad|=%g |theta|=%g", method.c_str(),
                epoch, step.loss, step.grad.norm(), theta.norm());
  throw DivergenceError(buf);
}

struct Trainer {
  const TrainConfig& config;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kFeatureDim);
  Eigen::VectorXd theta_ref = Eigen::VectorXd::Zero(kFeatureDim);
  Rng rng;

  explicit Trainer(const TrainConfig& c) : config(c), rng(derive_seed(c.seed, "train")) {}

  PolicyParams params() const {
    PolicyParams p;
    p.theta = theta;
    p.temperature = config.temperature;
    return p;
  }

  // One pass over the groups: full batch, or shuffled mini-batches.
  void epoch(TrainMethod method, const std::vector<FeatureGroup>& groups, const Eigen::VectorXd& theta_old,
             std::size_t epoch_index) {
    const std::size_t batch = config.batch_size;
    if (batch == 0 || batch >= groups.size()) {
      step(method, groups, theta_old, epoch_index);
      return;
    }
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::vector<FeatureGroup> part;
      const std::size_t end = std::min(order.size(), start + batch);
      for (std::size_t i = start; i < end; ++i) part.push_back(groups[order[i]]);
      step(method, part, theta_old, epoch_index);
    }
  }

  void step(TrainMethod method, const std::vector<FeatureGroup>& groups, const Eigen::VectorXd& theta_old,
            std::size_t epoch_index) {
    const auto obj = batch_objective(method, groups, theta, theta_old, theta_ref, config);
    guard(obj, theta, epoch_index, to_string(method));
    theta -= config.learning_rate * obj.grad;
    guard(obj, theta, epoch_index, to_string(method));
  }

  EpochLog log_row(TrainMethod method, std::size_t epoch_index, const std::vector<FeatureGroup>& groups,
                   const Eigen::VectorXd& theta_old, const std::vector<FeatureGroup>& eval) {
    const auto obj = batch_objective(method, groups, theta, theta_old, theta_ref, config);
    guard(obj, theta, epoch_index, to_string(method));
    return {epoch_index, obj.loss, obj.kl, top1_agreement(params(), eval)};
  }
};

std::vector<FeatureGroup> featurize(const std::vector<PreferenceGroup>& groups, RewardMode mode) {
  std::vector<FeatureGroup> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(make_feature_group(with_reward_mode(g, mode)));
  return out;
}

TrainResult train_online(const std::vector<PreferenceGroup>& warmup_data, const TrainConfig& config,
                         const std::vector<FeatureGroup>& held_out) {
  const OnlineConfig& oc = config.online;
  Trainer trainer(config);
  TrainResult result;

  auto harvest = [&](std::size_t iteration) {
    std::vector<std::size_t> order(oc.specs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng pick(derive_seed(config.seed, "online-specs", iteration));
    shuffle(order, pick);
    order.resize(std::min(order.size(), std::max<std::size_t>(1, oc.dialogues_per_iteration)));
    std::vector<Specification> specs;
    for (std::size_t i : order) specs.push_back(oc.specs[i]);
    PolicySelector rollout(trainer.params(), oc.strategies, oc.k, SelectMode::kSample, "online");
    DatasetConfig dc;
    dc.persona = oc.persona;
    dc.strategies = oc.strategies;
    dc.k = oc.k;
    dc.seed = derive_seed(config.seed, "online-rollout", iteration);
    dc.tau_bits = oc.tau_bits;
    dc.max_turns = oc.max_turns;
    dc.threads = oc.threads;
    return featurize(build_dataset(*oc.world_model, specs, rollout, dc).groups, config.reward_mode);
  };

  std::vector<FeatureGroup> groups = harvest(0);
  const auto& eval0 = held_out.empty() ? groups : held_out;
  result.log.push_back(trainer.log_row(TrainMethod::kGrpoOnline, 0, groups, trainer.theta, eval0));

  const std::vector<FeatureGroup> warm = warmup_data.empty() ? groups : featurize(warmup_data, config.reward_mode);
  for (std::size_t e = 0; e < oc.warmup_epochs; ++e) trainer.epoch(TrainMethod::kSft, warm, trainer.theta, 0);
  trainer.theta_ref = trainer.theta;

  for (std::size_t it = 1; it <= config.epochs; ++it) {
    if (it > 1 || oc.warmup_epochs > 0) groups = harvest(it);
    const Eigen::VectorXd theta_old = trainer.theta;
    for (std::size_t s = 0; s < oc.inner_steps; ++s) {
      trainer.epoch(TrainMethod::kGrpoOnline, groups, theta_old, it);
    }
    const auto& eval = held_out.empty() ? groups : held_out;
    result.log.push_back(trainer.log_row(TrainMethod::kGrpoOnline, it, groups, theta_old, eval));
  }
  result.params = trainer.params();
  return result;
}

}  // namespace

TrainResult train(const std::vector<PreferenceGroup>& dataset, const TrainConfig& config,
                  const std::vector<PreferenceGroup>& held_out) {
  config.validate();
  const std::vector<FeatureGroup> eval_groups = featurize(held_out, config.reward_mode);
  TrainResult result;
  if (config.method == TrainMethod::kGrpoOnline) {
    result = train_online(dataset, config, eval_groups);
  } else {
    if (dataset.empty()) throw ValidationError("training dataset is empty");
    const std::vector<FeatureGroup> groups = featurize(dataset, config.reward_mode);
    Trainer trainer(config);
    batch_objective(config.method, groups, trainer.theta, trainer.theta, trainer.theta_ref, config,
                    &result.skipped_groups);
    if (result.skipped_groups == groups.size()) {
      throw ValidationError("every group has constant rewards; nothing to train on");
    }
    const auto& eval = eval_groups.empty() ? groups : eval_groups;
    const Eigen::VectorXd theta_old = trainer.theta_ref;
    result.log.push_back(trainer.log_row(config.method, 0, groups, theta_old, eval));
    for (std::size_t e = 1; e <= config.epochs; ++e) {
      trainer.epoch(config.method, groups, theta_old, e);
      result.log.push_back(trainer.log_row(config.method, e, groups, theta_old, eval));
    }
    result.params = trainer.params();
  }
  result.params.trained_with =
      TrainedWith{to_string(config.method), to_string(config.reward_mode), config.seed, config.epochs};
  return result;
}

std::string serialize_training_log(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss,kl_term,top1_agreement\n";
  char buf[128];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.6f\n", row.epoch, row.loss, row.kl_term, row.top1_agreement);
    out += buf;
  }
  return out;
}

}  // namespace inquiry
