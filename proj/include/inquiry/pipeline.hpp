// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inquiry/datagen.hpp"
#include "inquiry/eval.hpp"
#include "inquiry/policy.hpp"
#include "inquiry/schema.hpp"

namespace inquiry {

/// End-to-end reward ablation and persona suite: corpus, prior, preference
/// data, entropy- and slot-count-trained policies, fixed-budget evaluation
/// against a uniform-random baseline, and a persona comparison run to
/// completion.
struct AblationConfig {
  SchemaPtr schema;
  GenConfig gen;
  std::uint64_t seed = 0;
  std::size_t corpus_size = 1000;
  double alpha = 1.0;
  std::size_t train_dialogues = 300;
  std::size_t eval_dialogues = 200;
  std::size_t budget = 10;
  std::size_t persona_dialogues = 200;
  std::size_t persona_max_turns = 200;
  std::size_t k = 8;
  double epsilon = 0.2;
  TrainConfig train;  // method and reward mode are overridden
  ParserMode parser = ParserMode::kStructured;
  Gateway* gateway = nullptr;
  unsigned threads = 0;

  void validate() const;
};

struct EvalCell {
  RunSummary summary;
  std::vector<Transcript> transcripts;
};

struct AblationResult {
  std::vector<Specification> corpus;
  WorldModel world_model;
  Dataset dataset;
  TrainResult entropy_policy;
  TrainResult slot_policy;
  std::vector<EvalCell> budget_cells;  // entropy, slot-count, uniform-random, greedy-entropy
  PersonaComparison personas;

  const EvalCell& cell(const std::string& policy_id) const;
};

AblationResult run_ablation(const AblationConfig& config);

/// Writes every artifact into `out_dir`; returns the written paths.
std::vector<std::string> write_ablation(const AblationResult& result, const std::string& out_dir);

}  // namespace inquiry
