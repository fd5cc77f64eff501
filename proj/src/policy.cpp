// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/policy.hpp"

#include <cmath>

#include "json.hpp"

namespace inquiry {

using json = nlohmann::ordered_json;

Eigen::VectorXd question_features(const BeliefState& belief, const std::vector<std::string>& targets) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(kFeatureDim);
  for (const auto& id : targets) {
    const std::size_t i = belief.schema().require_index(id);
    const double h = belief.marginal_entropy(i);
    phi(0) += h;
    phi(1) = std::max(phi(1), h);
    phi(2) += 1.0;
    if (belief.resolved(i)) phi(3) += 1.0;
  }
  phi(4) = targets.empty() ? 1.0 : 0.0;
  phi(5) = 1.0;
  return phi;
}

Eigen::MatrixXd group_features(const BeliefState& belief,
                               const std::vector<std::vector<std::string>>& targets) {
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(targets.size()), kFeatureDim);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    phi.row(static_cast<Eigen::Index>(i)) = question_features(belief, targets[i]).transpose();
  }
  return phi;
}

std::string to_string(TrainMethod method) {
  switch (method) {
    case TrainMethod::kSft: return "sft";
    case TrainMethod::kDpo: return "dpo";
    case TrainMethod::kGrpoOffline: return "grpo-offline";
    case TrainMethod::kGrpoOnline: return "grpo-online";
  }
  return "grpo-offline";
}

TrainMethod train_method_from_string(const std::string& text) {
  if (text == "sft") return TrainMethod::kSft;
  if (text == "dpo") return TrainMethod::kDpo;
  if (text == "grpo-offline") return TrainMethod::kGrpoOffline;
  if (text == "grpo-online") return TrainMethod::kGrpoOnline;
  throw ValidationError("unknown training method '" + text + "'");
}

std::string to_string(SelectMode mode) { return mode == SelectMode::kGreedy ? "greedy" : "sample"; }

SelectMode select_mode_from_string(const std::string& text) {
  if (text == "greedy") return SelectMode::kGreedy;
  if (text == "sample") return SelectMode::kSample;
  throw ValidationError("unknown selection mode '" + text + "'");
}

void PolicyParams::validate() const {
  if (theta.size() != kFeatureDim) {
    throw ValidationError("policy theta must have " + std::to_string(kFeatureDim) + " entries");
  }
  if (!theta.allFinite()) throw ValidationError("policy theta must be finite");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("policy temperature must be positive");
  }
}

std::string serialize_policy(const PolicyParams& params) {
  params.validate();
  json j;
  j["theta"] = std::vector<double>(params.theta.data(), params.theta.data() + params.theta.size());
  j["temperature"] = params.temperature;
  j["feature_version"] = std::string(kFeatureVersion);
  if (params.trained_with) {
    const auto& t = *params.trained_with;
    j["trained_with"] = {{"method", t.method}, {"reward_mode", t.reward_mode}, {"seed", t.seed},
                         {"epochs", t.epochs}};
  } else {
    j["trained_with"] = nullptr;
  }
  return j.dump(2) + "\n";
}

PolicyParams parse_policy(const std::string& json_text) {
  PolicyParams params;
  try {
    const json j = json::parse(json_text);
    const auto theta = j.at("theta").get<std::vector<double>>();
    params.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    params.temperature = j.value("temperature", 1.0);
    const std::string version = j.value("feature_version", std::string(kFeatureVersion));
    if (version != kFeatureVersion) throw ValidationError("unsupported feature_version '" + version + "'");
    if (j.contains("trained_with") && j["trained_with"].is_object()) {
      const json& t = j["trained_with"];
      params.trained_with = TrainedWith{t.value("method", ""), t.value("reward_mode", ""),
                                        t.value("seed", std::uint64_t{0}), t.value("epochs", std::size_t{0})};
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid policy file: ") + e.what());
  }
  params.validate();
  return params;
}

PolicyParams load_policy(const std::string& path) { return parse_policy(read_text_file(path)); }

Eigen::VectorXd policy_log_probs(const PolicyParams& params, const Eigen::MatrixXd& features) {
  if (features.rows() == 0) throw ValidationError("policy: empty candidate group");
  return group_log_probs<double>(features, params.theta, params.temperature);
}

double policy_logprob(const PolicyParams& params, const Eigen::MatrixXd& features, std::size_t index) {
  if (index >= static_cast<std::size_t>(features.rows())) {
    throw ValidationError("policy: candidate index out of range");
  }
  return policy_log_probs(params, features)(static_cast<Eigen::Index>(index));
}

std::size_t select_index(const PolicyParams& params, const Eigen::MatrixXd& features, SelectMode mode,
                         Rng& rng) {
  if (features.rows() == 0) throw ValidationError("policy: empty candidate pool");
  if (mode == SelectMode::kGreedy) {
    const Eigen::VectorXd scores = group_scores<double>(features, params.theta, params.temperature);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i) {
      if (scores(i) > scores(best)) best = i;
    }
    return static_cast<std::size_t>(best);
  }
  const Eigen::VectorXd p = policy_log_probs(params, features).array().exp();
  return sample_categorical(rng, std::vector<double>(p.data(), p.data() + p.size()));
}

Question select_question(const PolicyParams& params, const BeliefState& belief,
                         const CandidateSet& candidates, SelectMode mode, Rng& rng) {
  std::vector<std::vector<std::string>> targets;
  for (const auto& q : candidates.candidates) targets.push_back(q.targets);
  const std::size_t i = select_index(params, group_features(belief, targets), mode, rng);
  Question q = candidates.candidates[i];
  q.origin = QuestionOrigin::kPolicy;
  return q;
}

PolicySelector::PolicySelector(PolicyParams params, StrategyMix strategies, std::size_t k, SelectMode mode,
                               std::string id)
    : params_(std::move(params)), strategies_(std::move(strategies)), k_(k), mode_(mode), id_(std::move(id)) {
  params_.validate();
}

std::optional<Question> PolicySelector::select(const BeliefState& belief, Rng& rng) const {
  const CandidateSet set = generate_candidates(belief, strategies_, k_, rng);
  return select_question(params_, belief, set, mode_, rng);
}

PolicySelector uniform_random_selector(StrategyMix strategies, std::size_t k) {
  return PolicySelector(PolicyParams::uniform(), std::move(strategies), k, SelectMode::kSample,
                        "uniform-random");
}

// -- feature groups ---------------------------------------------------------------------

FeatureGroup make_feature_group(const PreferenceGroup& group) {
  if (group.size() < 2) throw ValidationError("preference group needs at least 2 candidates");
  FeatureGroup fg;
  fg.phi = group_features(group.belief, group.targets);
  fg.rewards = Eigen::Map<const Eigen::VectorXd>(group.rewards.data(),
                                                 static_cast<Eigen::Index>(group.rewards.size()));
  if (group.advantages.size() != group.size()) throw ValidationError("preference group is missing advantages");
  fg.advantages = Eigen::Map<const Eigen::VectorXd>(group.advantages.data(),
                                                    static_cast<Eigen::Index>(group.advantages.size()));
  for (Eigen::Index i = 1; i < fg.rewards.size(); ++i) {
    if (fg.rewards(i) > fg.rewards(fg.best)) fg.best = i;
    if (fg.rewards(i) < fg.rewards(fg.worst)) fg.worst = i;
  }
  fg.constant = fg.rewards(fg.best) - fg.rewards(fg.worst) < 1e-12;
  return fg;
}

std::vector<FeatureGroup> make_feature_groups(const std::vector<PreferenceGroup>& groups) {
  std::vector<FeatureGroup> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(make_feature_group(g));
  return out;
}

double top1_agreement(const PolicyParams& params, const std::vector<FeatureGroup>& groups) {
  std::size_t counted = 0;
  std::size_t agree = 0;
  Rng unused(0);
  for (const auto& g : groups) {
    if (g.constant) continue;
    ++counted;
    const auto i = static_cast<Eigen::Index>(select_index(params, g.phi, SelectMode::kGreedy, unused));
    if (g.rewards(i) >= g.rewards(g.best)) ++agree;
  }
  return counted == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(counted);
}

}  // namespace inquiry
