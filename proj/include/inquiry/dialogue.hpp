// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "inquiry/belief.hpp"
#include "inquiry/schema.hpp"

namespace inquiry {

class Gateway;

inline constexpr std::string_view kInitialRequest = "I want to create a scientific diagram.";

enum class QuestionOrigin { kTemplate, kPolicy, kLlm };
std::string to_string(QuestionOrigin origin);
QuestionOrigin question_origin_from_string(const std::string& text);

/// A question with machine-readable targets. Off-topic questions have no
/// targets.
struct Question {
  std::vector<std::string> targets;
  std::string text;
  QuestionOrigin origin = QuestionOrigin::kTemplate;

  bool off_topic() const { return targets.empty(); }
};

/// Templated surface text for a question about `targets`.
std::string render_question(const Schema& schema, const std::vector<std::string>& targets);
Question make_question(const Schema& schema, std::vector<std::string> targets,
                       QuestionOrigin origin = QuestionOrigin::kTemplate);
void validate_question(const Schema& schema, const Question& question);

struct Answer {
  std::string text;
  std::map<std::string, std::vector<std::string>> revealed;
  std::vector<std::string> noise_spans;
};

enum class PersonaKind { kExpert, kNovice, kNoisy };
std::string to_string(PersonaKind kind);
PersonaKind persona_kind_from_string(const std::string& text);

/// Simulated user behaviour. Expert reveals exact values; novice reveals a
/// coarse subset (or nothing); noisy answers like the expert but pads the
/// reply with irrelevant remarks.
struct OraclePersona {
  PersonaKind kind = PersonaKind::kExpert;
  double reveal_fraction = 0.7;
  std::size_t subset_coarseness = 2;
  double noise_rate = 0.5;
  std::uint64_t seed = 0;

  static OraclePersona expert() { return {}; }
  static OraclePersona novice(double reveal_fraction = 0.7, std::size_t coarseness = 2) {
    return {PersonaKind::kNovice, reveal_fraction, coarseness, 0.5, 0};
  }
  static OraclePersona noisy(double noise_rate = 0.5) {
    return {PersonaKind::kNoisy, 0.7, 2, noise_rate, 0};
  }

  void validate() const;
  /// Distribution of answers this persona gives, for information-gain
  /// enumeration.
  AnswerModel answer_model() const;
  std::string describe() const;
};

Answer oracle_answer(const OraclePersona& persona, const Schema& schema,
                     const Specification& ground_truth, const Question& question, Rng& turn_rng);

enum class ParserMode { kStructured, kGateway };
std::string to_string(ParserMode mode);
ParserMode parser_mode_from_string(const std::string& text);

/// Structured mode passes the answer's `revealed` map through; gateway mode
/// sends the surface text to the configured model.
Evidence parse_answer(ParserMode mode, const Schema& schema, const Question& question,
                      const Answer& answer, Gateway* gateway = nullptr);

/// Chooses the next question from the current belief, or nothing to stop.
class QuestionSelector {
 public:
  virtual ~QuestionSelector() = default;
  virtual std::optional<Question> select(const BeliefState& belief, Rng& rng) const = 0;
  virtual std::string id() const = 0;
};

/// Asks about the single unresolved attribute with the highest marginal
/// entropy (lowest index on ties). Stops once everything is resolved.
class GreedyEntropySelector final : public QuestionSelector {
 public:
  std::optional<Question> select(const BeliefState& belief, Rng& rng) const override;
  std::string id() const override { return "greedy-entropy"; }
};

enum class StopReason { kEntropyThreshold, kTurnBudget, kPolicyStop };
std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& text);

struct DialogueConfig {
  double tau_bits = 0.01;
  std::size_t max_turns = 30;
  std::uint64_t seed = 0;
  ParserMode parser = ParserMode::kStructured;
  Gateway* gateway = nullptr;
  ContradictionPolicy contradictions = ContradictionPolicy::kStrict;
  bool keep_beliefs = true;  // store a belief snapshot after every turn
};

struct TurnRecord {
  Question question;
  Answer answer;
  Evidence evidence;
  RewardRecord reward;
  std::optional<BeliefState> belief_after;
};

struct FinalValue {
  std::string id;
  std::string value;
  bool resolved = false;
  double probability = 0.0;
};

struct Transcript {
  std::string dialogue_id;
  std::string initial_request{kInitialRequest};
  std::string policy_id;
  std::string persona;
  std::string ground_truth_id;
  double initial_entropy = 0.0;
  double final_entropy = 0.0;
  std::vector<TurnRecord> turns;
  std::vector<FinalValue> final_specification;
  StopReason stop_reason = StopReason::kEntropyThreshold;

  double cumulative_ig() const;
  /// Rewards r_1..r_T in order.
  std::vector<double> rewards() const;
};

/// Final specification from a belief: resolved values, otherwise the most
/// probable value flagged as unresolved.
std::vector<FinalValue> final_specification(const BeliefState& belief);

/// "User: ...\nAssistant: ...\n" history used as the prompt text.
std::string render_history(const Transcript& transcript, std::size_t up_to_turn);

Transcript run_dialogue(const QuestionSelector& policy, const OraclePersona& persona,
                        const WorldModel& world_model, const Specification& ground_truth,
                        const DialogueConfig& config, std::string dialogue_id = {});

enum class DescriptionMode { kStructured, kGateway };

/// Templated description of the final specification. Gateway mode prepends
/// model prose and falls back to the template if the gateway fails.
std::string consolidate_description(const Transcript& transcript,
                                    DescriptionMode mode = DescriptionMode::kStructured,
                                    Gateway* gateway = nullptr);

// transcript JSONL: header record, one record per turn, footer record.
std::string serialize_transcript(const Transcript& transcript);
std::vector<Transcript> parse_transcripts(const SchemaPtr& schema, const std::string& jsonl);

}  // namespace inquiry
