// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "inquiry/dialogue.hpp"

namespace inquiry {

inline const std::vector<std::size_t> kDefaultCheckpoints{1, 5, 10, 15, 20};

struct RunSummary {
  std::string policy_id;
  std::string persona;
  std::size_t n_dialogues = 0;
  double mean_turns = 0.0;
  double mean_total_ig = 0.0;       // bits
  double mean_initial_entropy = 0.0;  // bits
  std::map<std::size_t, double> ig_at_turn;  // checkpoint -> mean cumulative bits
  std::map<std::string, std::size_t> stop_reasons;
  std::size_t non_singleton_turns = 0;
};

/// Cumulative IG indexed by turn 0..max_turn (entry 0 is zero), carried flat
/// past the end.
std::vector<double> cumulative_ig_curve(const Transcript& transcript, std::size_t max_turn);

RunSummary summarize_runs(const std::vector<Transcript>& transcripts,
                          const std::vector<std::size_t>& checkpoints = kDefaultCheckpoints);

struct EvalConfig {
  double tau_bits = 0.01;
  std::size_t max_turns = 30;
  std::uint64_t seed = 0;
  ParserMode parser = ParserMode::kStructured;
  Gateway* gateway = nullptr;
  bool keep_beliefs = false;
  unsigned threads = 0;
};

/// Runs one dialogue per specification. Dialogue i uses a seed derived from
/// (config.seed, i) only, so paired runs across personas and policies share
/// ground truths and seeds.
std::vector<Transcript> run_batch(const QuestionSelector& policy, const OraclePersona& persona,
                                  const WorldModel& world_model, const std::vector<Specification>& specs,
                                  const EvalConfig& config);

struct PersonaComparison {
  std::vector<RunSummary> summaries;
  std::vector<double> turn_deltas;  // mean turns minus the first persona's
  std::vector<double> ig_deltas;    // mean total IG minus the first persona's
  bool ig_parity = true;            // every |ig delta| <= 1e-6
};

PersonaComparison compare_personas(const QuestionSelector& policy, const std::vector<OraclePersona>& personas,
                                   const WorldModel& world_model, const std::vector<Specification>& specs,
                                   const EvalConfig& config);

// -- win rates ------------------------------------------------------------------------

enum class Outcome { kWin, kTie, kLoss };
enum class WinProtocol { kWin, kWtHalf, kWtFull };
std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& text);
std::string to_string(WinProtocol protocol);
WinProtocol win_protocol_from_string(const std::string& text);

struct Judgment {
  std::string item_id;
  std::string judge_id;
  std::string renderer_id;
  Outcome outcome = Outcome::kTie;
};

struct JudgmentSet {
  std::vector<Judgment> records;

  std::size_t wins() const;
  std::size_t ties() const;
  std::size_t losses() const;
};

/// win: w/n, wt_half: (w + t/2)/n, wt_full: (w + t)/n, with n = w + t + l.
double win_rate(const JudgmentSet& judgments, WinProtocol protocol);

JudgmentSet parse_judgments(const std::string& csv);
JudgmentSet load_judgments(const std::string& path);

// -- reports ---------------------------------------------------------------------------

std::string summary_json(const RunSummary& summary);
std::string summaries_json(const std::vector<RunSummary>& summaries);
std::string summary_table(const std::vector<RunSummary>& summaries);
/// policy,persona,turn,mean_cumulative_ig for turns 0..max_turn.
std::string ig_curve_csv(const std::vector<std::pair<RunSummary, std::vector<Transcript>>>& cells,
                         std::size_t max_turn);
std::string comparison_json(const PersonaComparison& comparison);

}  // namespace inquiry
