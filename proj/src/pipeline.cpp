// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/pipeline.hpp"

#include <filesystem>

#include "json.hpp"

namespace inquiry {

using json = nlohmann::ordered_json;

void AblationConfig::validate() const {
  if (!schema) throw ValidationError("ablation needs a schema");
  if (corpus_size < train_dialogues + eval_dialogues) {
    throw ValidationError("corpus size must cover the training and evaluation dialogues");
  }
  if (train_dialogues == 0 || eval_dialogues == 0) {
    throw ValidationError("ablation needs training and evaluation dialogues");
  }
  if (persona_dialogues > eval_dialogues) {
    throw ValidationError("persona dialogues cannot exceed evaluation dialogues");
  }
  if (budget == 0 || persona_max_turns == 0) throw ValidationError("turn budgets must be positive");
  train.validate();
}

const EvalCell& AblationResult::cell(const std::string& policy_id) const {
  for (const auto& c : budget_cells) {
    if (c.summary.policy_id == policy_id) return c;
  }
  throw ValidationError("no evaluation cell for policy '" + policy_id + "'");
}

AblationResult run_ablation(const AblationConfig& config) {
  config.validate();
  AblationResult result;
  result.corpus = generate_corpus(*config.schema, config.gen, config.corpus_size,
                                  derive_seed(config.seed, "corpus"));
  const std::vector<Specification> train_split(result.corpus.begin(),
                                               result.corpus.begin() + config.train_dialogues);
  const std::vector<Specification> eval_split(result.corpus.begin() + config.train_dialogues,
                                              result.corpus.begin() + config.train_dialogues + config.eval_dialogues);
  // The prior is estimated from the part of the corpus not used for evaluation.
  std::vector<Specification> prior_split(result.corpus.begin(), result.corpus.begin() + config.train_dialogues);
  prior_split.insert(prior_split.end(), result.corpus.begin() + config.train_dialogues + config.eval_dialogues,
                     result.corpus.end());
  result.world_model = estimate_prior(config.schema, prior_split, config.alpha);

  StrategyMix mix;
  DatasetConfig dc;
  dc.persona = OraclePersona::expert();
  dc.strategies = mix;
  dc.k = config.k;
  dc.seed = derive_seed(config.seed, "datagen");
  dc.parser = config.parser;
  dc.gateway = config.gateway;
  dc.threads = config.threads;
  const EpsilonGreedySelector rollout(config.epsilon, mix, config.k);
  result.dataset = build_dataset(result.world_model, train_split, rollout, dc);

  TrainConfig tc = config.train;
  tc.method = TrainMethod::kGrpoOffline;
  tc.seed = derive_seed(config.seed, "train");
  tc.reward_mode = RewardMode::kEntropy;
  result.entropy_policy = train(result.dataset.groups, tc);
  tc.reward_mode = RewardMode::kSlotCount;
  result.slot_policy = train(result.dataset.groups, tc);

  EvalConfig ec;
  ec.max_turns = config.budget;
  ec.seed = derive_seed(config.seed, "eval");
  ec.parser = config.parser;
  ec.gateway = config.gateway;
  ec.threads = config.threads;
  const PolicySelector entropy(result.entropy_policy.params, mix, config.k, SelectMode::kGreedy, "grpo-entropy");
  const PolicySelector slot(result.slot_policy.params, mix, config.k, SelectMode::kGreedy, "grpo-slot-count");
  const PolicySelector random = uniform_random_selector(mix, config.k);
  const GreedyEntropySelector greedy;
  const std::vector<const QuestionSelector*> selectors{&entropy, &slot, &random, &greedy};
  for (const QuestionSelector* s : selectors) {
    EvalCell cell;
    cell.transcripts = run_batch(*s, OraclePersona::expert(), result.world_model, eval_split, ec);
    cell.summary = summarize_runs(cell.transcripts);
    result.budget_cells.push_back(std::move(cell));
  }

  EvalConfig pc = ec;
  pc.tau_bits = 1e-9;
  pc.max_turns = config.persona_max_turns;
  pc.seed = derive_seed(config.seed, "personas");
  const std::vector<Specification> persona_split(eval_split.begin(), eval_split.begin() + config.persona_dialogues);
  result.personas = compare_personas(
      entropy, {OraclePersona::expert(), OraclePersona::novice(), OraclePersona::noisy()}, result.world_model,
      persona_split, pc);
  return result;
}

std::vector<std::string> write_ablation(const AblationResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const Schema& schema = *result.world_model.schema;
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& body) {
    const std::string path = (fs::path(out_dir) / name).string();
    write_text_file(path, body);
    written.push_back(path);
  };
  put("corpus.jsonl", serialize_corpus(schema, result.corpus));
  put("worldmodel.json", serialize_world_model(result.world_model));
  const std::string dataset_path = (fs::path(out_dir) / "dataset.jsonl").string();
  write_dataset(result.dataset, dataset_path);
  written.push_back(dataset_path);
  written.push_back(belief_sidecar_path(dataset_path));
  written.push_back(stats_path(dataset_path));
  put("policy_entropy.json", serialize_policy(result.entropy_policy.params));
  put("policy_slot_count.json", serialize_policy(result.slot_policy.params));
  put("train_log_entropy.csv", serialize_training_log(result.entropy_policy.log));
  put("train_log_slot_count.csv", serialize_training_log(result.slot_policy.log));

  std::vector<RunSummary> summaries;
  std::vector<std::pair<RunSummary, std::vector<Transcript>>> curves;
  for (const auto& c : result.budget_cells) {
    summaries.push_back(c.summary);
    curves.emplace_back(c.summary, c.transcripts);
  }
  json report;
  report["budget_runs"] = json::parse(summaries_json(summaries));
  const double entropy_ig = result.cell("grpo-entropy").summary.mean_total_ig;
  const double random_ig = result.cell("uniform-random").summary.mean_total_ig;
  const double slot_ig = result.cell("grpo-slot-count").summary.mean_total_ig;
  report["entropy_vs_random_ratio"] = round_decimals(random_ig > 0 ? entropy_ig / random_ig : 0.0, 6);
  report["entropy_minus_slot_count_bits"] = round_decimals(entropy_ig - slot_ig, 6);
  report["personas"] = json::parse(comparison_json(result.personas));
  report["dataset"] = json::parse(serialize_stats(result.dataset.stats));
  put("report.json", report.dump(2) + "\n");
  put("report.txt", summary_table(summaries) + "\n" + summary_table(result.personas.summaries));
  std::size_t max_turn = 0;
  for (const auto& c : result.budget_cells) {
    for (const auto& t : c.transcripts) max_turn = std::max(max_turn, t.turns.size());
  }
  put("ig_curves.csv", ig_curve_csv(curves, max_turn));
  return written;
}

}  // namespace inquiry
