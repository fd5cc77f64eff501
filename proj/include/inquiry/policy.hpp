// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inquiry/belief.hpp"
#include "inquiry/datagen.hpp"
#include "inquiry/dialogue.hpp"

namespace inquiry {

inline constexpr Eigen::Index kFeatureDim = 6;
inline constexpr std::string_view kFeatureVersion = "v1";

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// [sum of targeted entropies, max targeted entropy, targeted count,
///  resolved targeted count, off-topic flag, bias]
Eigen::VectorXd question_features(const BeliefState& belief, const std::vector<std::string>& targets);

/// One row per candidate.
Eigen::MatrixXd group_features(const BeliefState& belief,
                               const std::vector<std::vector<std::string>>& targets);

// -- group softmax --------------------------------------------------------------------

template <typename Scalar>
Vec<Scalar> group_scores(const Mat<Scalar>& phi, const Vec<Scalar>& theta, Scalar temperature) {
  return (phi * theta) / temperature;
}

template <typename Scalar>
Vec<Scalar> log_softmax(const Vec<Scalar>& scores) {
  if (scores.size() == 0) throw ValidationError("log_softmax: empty group");
  const Scalar top = scores.maxCoeff();
  const Scalar lse = top + std::log((scores.array() - top).exp().sum());
  return scores.array() - lse;
}

template <typename Scalar>
Vec<Scalar> group_log_probs(const Mat<Scalar>& phi, const Vec<Scalar>& theta, Scalar temperature) {
  return log_softmax<Scalar>(group_scores<Scalar>(phi, theta, temperature));
}

/// Rows: d log pi_i / d theta = (phi_i - E_p[phi]) / T.
template <typename Scalar>
Mat<Scalar> log_prob_jacobian(const Mat<Scalar>& phi, const Vec<Scalar>& probs, Scalar temperature) {
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = probs.transpose() * phi;
  return (phi.rowwise() - mean) / temperature;
}

template <typename Scalar>
struct LossGrad {
  Scalar loss{0};
  Vec<Scalar> grad;
  Scalar kl{0};
};

/// Exact KL(pi_theta || pi_ref) over the candidate set, in nats.
template <typename Scalar>
Scalar group_kl(const Vec<Scalar>& logp, const Vec<Scalar>& logq) {
  return (logp.array().exp() * (logp - logq).array()).sum();
}

/// Clipped-ratio surrogate with a KL penalty for one group:
///   loss = -( mean_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta KL(pi || pi_ref) )
/// with rho_i = pi(i) / pi_old(i).
template <typename Scalar>
LossGrad<Scalar> grpo_loss(const Mat<Scalar>& phi, const Vec<Scalar>& advantages, const Vec<Scalar>& theta,
                           const Vec<Scalar>& theta_old, const Vec<Scalar>& theta_ref, Scalar eps,
                           Scalar beta, Scalar temperature = Scalar(1)) {
  const Eigen::Index k = phi.rows();
  if (k == 0) throw ValidationError("grpo_loss: empty group");
  if (advantages.size() != k) throw ValidationError("grpo_loss: advantages do not match the group size");
  const Vec<Scalar> logp = group_log_probs<Scalar>(phi, theta, temperature);
  const Vec<Scalar> logold = group_log_probs<Scalar>(phi, theta_old, temperature);
  const Vec<Scalar> logref = group_log_probs<Scalar>(phi, theta_ref, temperature);
  const Vec<Scalar> p = logp.array().exp();
  const Mat<Scalar> jac = log_prob_jacobian<Scalar>(phi, p, temperature);

  LossGrad<Scalar> out;
  out.grad = Vec<Scalar>::Zero(phi.cols());
  Scalar surrogate(0);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Scalar rho = std::exp(logp(i) - logold(i));
    const Scalar clipped = std::clamp(rho, Scalar(1) - eps, Scalar(1) + eps);
    const Scalar a = advantages(i);
    const Scalar raw_term = rho * a;
    const Scalar clip_term = clipped * a;
    if (raw_term <= clip_term) {
      surrogate += raw_term;
      out.grad.noalias() -= (a * rho / Scalar(k)) * jac.row(i).transpose();
    } else {
      surrogate += clip_term;
    }
  }
  surrogate /= Scalar(k);
  out.kl = group_kl<Scalar>(logp, logref);
  const Vec<Scalar> w = p.array() * (logp - logref).array();
  out.grad.noalias() += beta * (jac.transpose() * w);
  out.loss = -(surrogate - beta * out.kl);
  return out;
}

/// Negative log-likelihood of candidate `best`.
template <typename Scalar>
LossGrad<Scalar> sft_loss(const Mat<Scalar>& phi, Eigen::Index best, const Vec<Scalar>& theta,
                          Scalar temperature = Scalar(1)) {
  if (phi.rows() == 0) throw ValidationError("sft_loss: empty group");
  if (best < 0 || best >= phi.rows()) throw ValidationError("sft_loss: target index out of range");
  const Vec<Scalar> logp = group_log_probs<Scalar>(phi, theta, temperature);
  const Vec<Scalar> p = logp.array().exp();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = p.transpose() * phi;
  LossGrad<Scalar> out;
  out.loss = -logp(best);
  out.grad = -(phi.row(best) - mean).transpose() / temperature;
  return out;
}

/// -log sigmoid(beta * [(log pi(w) - log ref(w)) - (log pi(l) - log ref(l))]).
template <typename Scalar>
LossGrad<Scalar> dpo_loss(const Mat<Scalar>& phi, Eigen::Index winner, Eigen::Index loser,
                          const Vec<Scalar>& theta, const Vec<Scalar>& theta_ref, Scalar beta,
                          Scalar temperature = Scalar(1)) {
  if (phi.rows() == 0) throw ValidationError("dpo_loss: empty group");
  if (winner == loser) throw ValidationError("dpo_loss: winner and loser coincide");
  const Vec<Scalar> logp = group_log_probs<Scalar>(phi, theta, temperature);
  const Vec<Scalar> logref = group_log_probs<Scalar>(phi, theta_ref, temperature);
  const Scalar z = beta * ((logp(winner) - logref(winner)) - (logp(loser) - logref(loser)));
  LossGrad<Scalar> out;
  // softplus(-z), stable for large |z|
  out.loss = z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  const Scalar sig_neg = Scalar(1) / (Scalar(1) + std::exp(z));  // 1 - sigmoid(z)
  out.grad = -(sig_neg * beta / temperature) * (phi.row(winner) - phi.row(loser)).transpose();
  out.kl = group_kl<Scalar>(logp, logref);
  return out;
}

// -- parameters ---------------------------------------------------------------------

enum class TrainMethod { kSft, kDpo, kGrpoOffline, kGrpoOnline };
std::string to_string(TrainMethod method);
TrainMethod train_method_from_string(const std::string& text);

struct TrainedWith {
  std::string method;
  std::string reward_mode;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
};

struct PolicyParams {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kFeatureDim);
  double temperature = 1.0;
  std::optional<TrainedWith> trained_with;

  void validate() const;
  static PolicyParams uniform() { return {}; }
};

std::string serialize_policy(const PolicyParams& params);
PolicyParams parse_policy(const std::string& json_text);
PolicyParams load_policy(const std::string& path);

/// log pi(i) for a candidate group.
Eigen::VectorXd policy_log_probs(const PolicyParams& params, const Eigen::MatrixXd& features);
double policy_logprob(const PolicyParams& params, const Eigen::MatrixXd& features, std::size_t index);

enum class SelectMode { kGreedy, kSample };
std::string to_string(SelectMode mode);
SelectMode select_mode_from_string(const std::string& text);

/// Greedy: highest score, lowest index on ties. Sample: draw from the softmax.
std::size_t select_index(const PolicyParams& params, const Eigen::MatrixXd& features, SelectMode mode,
                         Rng& rng);
Question select_question(const PolicyParams& params, const BeliefState& belief,
                         const CandidateSet& candidates, SelectMode mode, Rng& rng);

/// Deploys a policy in dialogues: each turn draws a fresh candidate group and
/// picks one question from it.
class PolicySelector final : public QuestionSelector {
 public:
  PolicySelector(PolicyParams params, StrategyMix strategies, std::size_t k = 8,
                 SelectMode mode = SelectMode::kGreedy, std::string id = "policy");
  std::optional<Question> select(const BeliefState& belief, Rng& rng) const override;
  std::string id() const override { return id_; }
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
  StrategyMix strategies_;
  std::size_t k_;
  SelectMode mode_;
  std::string id_;
};

/// Uniformly random choice from each generated candidate group.
PolicySelector uniform_random_selector(StrategyMix strategies, std::size_t k = 8);

// -- training -------------------------------------------------------------------------

/// A preference group reduced to what the trainers need.
struct FeatureGroup {
  Eigen::MatrixXd phi;
  Eigen::VectorXd advantages;
  Eigen::VectorXd rewards;
  Eigen::Index best = 0;   // highest reward, lowest index on ties
  Eigen::Index worst = 0;  // lowest reward, lowest index on ties
  bool constant = false;
};

FeatureGroup make_feature_group(const PreferenceGroup& group);
std::vector<FeatureGroup> make_feature_groups(const std::vector<PreferenceGroup>& groups);

/// Fraction of non-constant groups where the policy's greedy choice attains
/// the maximum reward. Returns 0 when every group is constant.
double top1_agreement(const PolicyParams& params, const std::vector<FeatureGroup>& groups);

struct OnlineConfig {
  const WorldModel* world_model = nullptr;
  std::vector<Specification> specs;
  OraclePersona persona;
  StrategyMix strategies;
  std::size_t k = 8;
  std::size_t dialogues_per_iteration = 64;
  std::size_t inner_steps = 4;
  std::size_t warmup_epochs = 1;
  double tau_bits = 0.01;
  std::size_t max_turns = 30;
  unsigned threads = 0;
};

struct TrainConfig {
  TrainMethod method = TrainMethod::kGrpoOffline;
  std::size_t epochs = 5;
  double learning_rate = 0.2;
  double clip_epsilon = 0.2;
  double kl_beta = 0.01;
  double dpo_beta = 0.1;
  std::uint64_t seed = 0;
  RewardMode reward_mode = RewardMode::kEntropy;
  double temperature = 1.0;
  std::size_t batch_size = 0;  // 0 = full batch
  OnlineConfig online;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double kl_term = 0.0;
  double top1_agreement = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<EpochLog> log;  // row 0 is the initial policy
  std::size_t skipped_groups = 0;
};

/// Mean loss, gradient and KL of `method` over the groups at theta.
LossGrad<double> batch_objective(TrainMethod method, const std::vector<FeatureGroup>& groups,
                                 const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_old,
                                 const Eigen::VectorXd& theta_ref, const TrainConfig& config,
                                 std::size_t* skipped = nullptr);

/// Offline training (sft, dpo, grpo-offline) on a fixed dataset, or online
/// GRPO with `config.online`. `held_out` feeds the top-1 column of the log;
/// the training groups are used when it is empty.
TrainResult train(const std::vector<PreferenceGroup>& dataset, const TrainConfig& config,
                  const std::vector<PreferenceGroup>& held_out = {});

std::string serialize_training_log(const std::vector<EpochLog>& log);

}  // namespace inquiry
