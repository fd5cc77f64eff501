// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "inquiry/belief.hpp"
#include "inquiry/dialogue.hpp"

namespace inquiry {

enum class CandidateStrategy { kPerAttribute, kMultiAttribute, kLowValue, kOffTopic, kGateway };
inline constexpr std::size_t kStrategyCount = 5;
std::string to_string(CandidateStrategy strategy);

/// Relative share of each strategy in a candidate group. A strategy with
/// zero weight is disabled; every enabled strategy gets at least one slot.
struct StrategyMix {
  std::array<double, kStrategyCount> weights{1.0, 1.0, 1.0, 1.0, 0.0};
  std::size_t min_targets = 2;
  std::size_t max_targets = 4;
  bool allow_duplicates = false;
  bool shuffle = true;  // randomize candidate order within the group
  Gateway* gateway = nullptr;

  double weight(CandidateStrategy s) const { return weights[static_cast<std::size_t>(s)]; }
  void set_weight(CandidateStrategy s, double w) { weights[static_cast<std::size_t>(s)] = w; }
  /// Slots per strategy for a group of size k (largest remainder).
  std::array<std::size_t, kStrategyCount> quotas(std::size_t k) const;
};

struct CandidateSet {
  std::string prompt;
  std::vector<Question> candidates;
  std::vector<CandidateStrategy> tags;

  std::size_t size() const { return candidates.size(); }
};

CandidateSet generate_candidates(const BeliefState& belief, const StrategyMix& strategies,
                                 std::size_t k, Rng& rng, std::string prompt = {});

enum class RewardMode { kEntropy, kSlotCount };
std::string to_string(RewardMode mode);
RewardMode reward_mode_from_string(const std::string& text);

/// One training sample: a prompt, k candidate questions, their rewards and
/// group-normalized advantages.
struct PreferenceGroup {
  std::string prompt;
  std::vector<std::string> responses;
  std::vector<double> rewards;     // bits, 6 decimals
  std::vector<double> advantages;  // z-scored rewards
  std::vector<std::size_t> slots;  // attributes each answer constrained
  std::vector<std::vector<std::string>> targets;
  std::string dialogue_id;
  std::size_t turn = 0;
  std::string ground_truth_id;
  std::string belief_ref;
  BeliefState belief;  // state at the prompt

  std::size_t size() const { return responses.size(); }
};

/// A_i = (R_i - mean) / std with the population std; all zeros when the
/// rewards are constant (std < 1e-12). The last entry absorbs rounding so the
/// advantages sum to exactly zero when added in order.
std::vector<double> zscore_advantages(const std::vector<double>& rewards);

/// Scores every candidate from the same belief (no candidate advances the
/// dialogue). Rewards are information gain in bits.
PreferenceGroup score_group(const CandidateSet& candidate_set, const OraclePersona& persona,
                            const Specification& ground_truth, const BeliefState& belief,
                            std::uint64_t answer_seed, ParserMode parser = ParserMode::kStructured,
                            Gateway* gateway = nullptr);

/// Slot-count mode replaces rewards by slot counts and recomputes advantages;
/// entropy mode returns the group unchanged.
PreferenceGroup with_reward_mode(PreferenceGroup group, RewardMode mode);

/// Greedy entropy with probability 1 - epsilon; otherwise a uniformly chosen
/// candidate from a generated group.
class EpsilonGreedySelector final : public QuestionSelector {
 public:
  EpsilonGreedySelector(double epsilon, StrategyMix strategies, std::size_t k = 8);
  std::optional<Question> select(const BeliefState& belief, Rng& rng) const override;
  std::string id() const override;

 private:
  double epsilon_;
  StrategyMix strategies_;
  std::size_t k_;
};

struct DatasetConfig {
  OraclePersona persona;
  StrategyMix strategies;
  std::size_t k = 8;
  std::size_t groups_per_dialogue = 0;  // 0 = every turn
  std::uint64_t seed = 0;
  double tau_bits = 0.01;
  std::size_t max_turns = 30;
  ParserMode parser = ParserMode::kStructured;
  Gateway* gateway = nullptr;
  unsigned threads = 0;
};

struct DatasetStats {
  std::size_t dialogues = 0;
  std::size_t groups = 0;
  std::size_t constant_groups = 0;
  double mean_best_reward = 0.0;
  std::map<std::size_t, std::size_t> reward_histogram;  // floor(bits) -> count
};

struct Dataset {
  std::vector<PreferenceGroup> groups;
  DatasetStats stats;
};

/// Rolls one dialogue per training specification with the rollout policy and
/// harvests preference groups from the pre-update beliefs.
Dataset build_dataset(const WorldModel& world_model, const std::vector<Specification>& training_split,
                      const QuestionSelector& rollout, const DatasetConfig& config);

// prefdata JSONL plus a belief sidecar (<path>.beliefs.jsonl) and stats.
std::string serialize_group(const PreferenceGroup& group);
std::string serialize_belief_sidecar(const std::vector<PreferenceGroup>& groups);
std::string serialize_stats(const DatasetStats& stats);
void write_dataset(const Dataset& dataset, const std::string& path);
std::vector<PreferenceGroup> parse_dataset(SchemaPtr schema, const std::string& jsonl,
                                           const std::string& beliefs_jsonl);
std::vector<PreferenceGroup> load_dataset(SchemaPtr schema, const std::string& path);
std::string belief_sidecar_path(const std::string& dataset_path);
std::string stats_path(const std::string& dataset_path);

}  // namespace inquiry
