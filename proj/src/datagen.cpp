// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "inquiry/gateway.hpp"
#include "json.hpp"

namespace inquiry {

using json = nlohmann::ordered_json;

std::string to_string(CandidateStrategy strategy) {
  switch (strategy) {
    case CandidateStrategy::kPerAttribute: return "per-attribute";
    case CandidateStrategy::kMultiAttribute: return "multi-attribute";
    case CandidateStrategy::kLowValue: return "low-value";
    case CandidateStrategy::kOffTopic: return "off-topic";
    case CandidateStrategy::kGateway: return "gateway";
  }
  return "per-attribute";
}

std::string to_string(RewardMode mode) {
  return mode == RewardMode::kEntropy ? "entropy" : "slot-count";
}

RewardMode reward_mode_from_string(const std::string& text) {
  if (text == "entropy") return RewardMode::kEntropy;
  if (text == "slot-count") return RewardMode::kSlotCount;
  throw ValidationError("unknown reward mode '" + text + "'");
}

std::array<std::size_t, kStrategyCount> StrategyMix::quotas(std::size_t k) const {
  std::array<std::size_t, kStrategyCount> q{};
  std::vector<std::size_t> enabled;
  double total = 0.0;
  for (std::size_t s = 0; s < kStrategyCount; ++s) {
    if (weights[s] < 0.0 || !std::isfinite(weights[s])) {
      throw ValidationError("strategy weights must be finite and nonnegative");
    }
    if (weights[s] > 0.0) {
      enabled.push_back(s);
      total += weights[s];
    }
  }
  if (enabled.empty()) throw ValidationError("no candidate strategy is enabled");
  if (k <= enabled.size()) {
    for (std::size_t i = 0; i < k; ++i) q[enabled[i]] = 1;
    return q;
  }
  const std::size_t extra = k - enabled.size();
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t given = 0;
  for (std::size_t s : enabled) {
    const double share = static_cast<double>(extra) * weights[s] / total;
    const auto whole = static_cast<std::size_t>(std::floor(share));
    q[s] = 1 + whole;
    given += whole;
    remainders.emplace_back(share - static_cast<double>(whole), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; given < extra; ++i, ++given) ++q[remainders[i % remainders.size()].second];
  return q;
}

namespace {

constexpr const char* kOffTopicPool[] = {
    "What is the main scientific idea behind the diagram?",
    "Which journal or venue is the figure intended for?",
    "Who is the intended audience for this figure?",
    "What motivated you to make this diagram?",
    "Do you have a deadline for the figure?",
    "Which software do you usually use for figures?",
    "Is this figure part of a larger paper?",
    "Have you made a similar diagram before?",
};

class GroupBuilder {
 public:
  GroupBuilder(const BeliefState& belief, const StrategyMix& mix, std::size_t k)
      : belief_(belief), mix_(mix), k_(k) {}

  bool full() const { return set_.candidates.size() >= k_; }

  bool add(Question q, CandidateStrategy tag) {
    if (full()) return false;
    std::string key;
    if (q.targets.empty()) {
      key = "#" + q.text;
    } else {
      for (const auto& t : q.targets) key += t + "\x1f";
    }
    if (!seen_.insert(key).second && !mix_.allow_duplicates) return false;
    set_.candidates.push_back(std::move(q));
    set_.tags.push_back(tag);
    return true;
  }

  bool add_targets(std::vector<std::size_t> attrs, CandidateStrategy tag) {
    std::sort(attrs.begin(), attrs.end());
    std::vector<std::string> ids;
    for (std::size_t i : attrs) ids.push_back(belief_.schema().attribute(i).id);
    return add(make_question(belief_.schema(), std::move(ids)), tag);
  }

  CandidateSet take() { return std::move(set_); }

 private:
  const BeliefState& belief_;
  const StrategyMix& mix_;
  std::size_t k_;
  CandidateSet set_;
  std::set<std::string> seen_;
};

// Attribute indices by descending marginal entropy, lowest index first on ties.
std::vector<std::size_t> by_entropy_desc(const BeliefState& belief) {
  std::vector<std::size_t> order(belief.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> h(belief.size());
  for (std::size_t i = 0; i < belief.size(); ++i) h[i] = belief.marginal_entropy(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] > h[b]; });
  return order;
}

void add_multi(GroupBuilder& builder, const BeliefState& belief, const StrategyMix& mix,
               std::size_t quota, Rng& rng) {
  const std::size_t n = belief.size();
  if (n < 2 || quota == 0) return;
  const std::size_t lo = std::clamp<std::size_t>(mix.min_targets, 2, n);
  const std::size_t hi = std::clamp<std::size_t>(mix.max_targets, lo, n);
  std::size_t added = 0;
  for (std::size_t attempt = 0; attempt < 20 * quota && added < quota && !builder.full(); ++attempt) {
    const std::size_t size = lo + uniform_index(rng, hi - lo + 1);
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    shuffle(pool, rng);
    pool.resize(size);
    if (builder.add_targets(pool, CandidateStrategy::kMultiAttribute)) ++added;
  }
}

}  // namespace

CandidateSet generate_candidates(const BeliefState& belief, const StrategyMix& strategies,
                                 std::size_t k, Rng& rng, std::string prompt) {
  if (k < 2) throw ValidationError("candidate groups need k >= 2");
  const auto quota = strategies.quotas(k);
  GroupBuilder builder(belief, strategies, k);
  const auto ranked = by_entropy_desc(belief);

  auto q = [&](CandidateStrategy s) { return quota[static_cast<std::size_t>(s)]; };

  // Highest-entropy single-attribute questions.
  {
    std::size_t added = 0;
    for (std::size_t i : ranked) {
      if (added >= q(CandidateStrategy::kPerAttribute)) break;
      if (builder.add_targets({i}, CandidateStrategy::kPerAttribute)) ++added;
    }
  }
  add_multi(builder, belief, strategies, q(CandidateStrategy::kMultiAttribute), rng);
  // Low-value: already-resolved attributes first, then the least uncertain.
  {
    std::vector<std::size_t> resolved;
    for (std::size_t i = 0; i < belief.size(); ++i) {
      if (belief.resolved(i)) resolved.push_back(i);
    }
    shuffle(resolved, rng);
    for (auto it = ranked.rbegin(); it != ranked.rend(); ++it) {
      if (!belief.resolved(*it)) resolved.push_back(*it);
    }
    std::size_t added = 0;
    for (std::size_t i : resolved) {
      if (added >= q(CandidateStrategy::kLowValue)) break;
      if (builder.add_targets({i}, CandidateStrategy::kLowValue)) ++added;
    }
  }
  std::vector<std::size_t> off_topic(std::size(kOffTopicPool));
  std::iota(off_topic.begin(), off_topic.end(), 0);
  shuffle(off_topic, rng);
  std::size_t next_off_topic = 0;
  for (std::size_t added = 0;
       added < q(CandidateStrategy::kOffTopic) && next_off_topic < off_topic.size(); ++next_off_topic) {
    Question oq{{}, kOffTopicPool[off_topic[next_off_topic]], QuestionOrigin::kTemplate};
    if (builder.add(std::move(oq), CandidateStrategy::kOffTopic)) ++added;
  }
  if (q(CandidateStrategy::kGateway) > 0) {
    if (strategies.gateway == nullptr) {
      warn("gateway candidate strategy enabled without a gateway; skipped");
    } else {
      std::vector<std::size_t> top;
      for (std::size_t i : ranked) {
        if (top.size() < 2 && !belief.resolved(i)) top.push_back(i);
      }
      if (!top.empty()) {
        std::string attrs;
        std::vector<std::string> ids;
        for (std::size_t i : top) {
          const auto& a = belief.schema().attribute(i);
          ids.push_back(a.id);
          attrs += "- " + a.label + "\n";
        }
        try {
          std::string text = strategies.gateway->complete(
              prompts::fill(prompts::get("question_v1"), {{"attributes", attrs}}));
          while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
          if (!text.empty()) {
            builder.add(Question{std::move(ids), std::move(text), QuestionOrigin::kLlm},
                        CandidateStrategy::kGateway);
          }
        } catch (const GatewayError& e) {
          warn(std::string("gateway question strategy failed: ") + e.what());
        }
      }
    }
  }

  // Top up when the schema is too small for the requested quotas.
  if (!builder.full()) add_multi(builder, belief, strategies, k, rng);
  for (; !builder.full() && next_off_topic < off_topic.size(); ++next_off_topic) {
    builder.add(Question{{}, kOffTopicPool[off_topic[next_off_topic]], QuestionOrigin::kTemplate},
                CandidateStrategy::kOffTopic);
  }
  for (std::size_t i : ranked) {
    if (builder.full()) break;
    builder.add_targets({i}, CandidateStrategy::kPerAttribute);
  }
  CandidateSet set = builder.take();
  if (set.size() < k) {
    throw ValidationError("cannot build " + std::to_string(k) + " distinct candidates (got " +
                          std::to_string(set.size()) + ")");
  }
  if (strategies.shuffle) {
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    CandidateSet shuffled;
    for (std::size_t i : order) {
      shuffled.candidates.push_back(std::move(set.candidates[i]));
      shuffled.tags.push_back(set.tags[i]);
    }
    set = std::move(shuffled);
  }
  set.prompt = std::move(prompt);
  return set;
}

// -- scoring --------------------------------------------------------------------------

std::vector<double> zscore_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) throw ValidationError("z-scoring needs at least 2 rewards");
  const Eigen::Map<const Eigen::VectorXd> r(rewards.data(), static_cast<Eigen::Index>(rewards.size()));
  const double mean = r.mean();
  const double std = std::sqrt((r.array() - mean).square().mean());
  std::vector<double> out(rewards.size(), 0.0);
  if (std < 1e-12) return out;
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < rewards.size(); ++i) {
    out[i] = (rewards[i] - mean) / std;
    partial += out[i];
  }
  out.back() = -partial;
  return out;
}

PreferenceGroup score_group(const CandidateSet& candidate_set, const OraclePersona& persona,
                            const Specification& ground_truth, const BeliefState& belief,
                            std::uint64_t answer_seed, ParserMode parser, Gateway* gateway) {
  if (candidate_set.size() < 2) throw ValidationError("score_group: need at least 2 candidates");
  PreferenceGroup group;
  group.prompt = candidate_set.prompt;
  group.ground_truth_id = ground_truth.id;
  group.belief = belief;
  for (std::size_t i = 0; i < candidate_set.size(); ++i) {
    const Question& q = candidate_set.candidates[i];
    Rng rng(derive_seed(answer_seed, "candidate", i));
    const Answer answer = oracle_answer(persona, belief.schema(), ground_truth, q, rng);
    const Evidence evidence = parse_answer(parser, belief.schema(), q, answer, gateway);
    BeliefState branch = belief;
    const RewardRecord record = apply_evidence_inplace(branch, evidence);
    group.responses.push_back(q.text);
    group.targets.push_back(q.targets);
    group.rewards.push_back(round_decimals(record.ig_bits, 6));
    group.slots.push_back(record.slots);
  }
  group.advantages = zscore_advantages(group.rewards);
  return group;
}

PreferenceGroup with_reward_mode(PreferenceGroup group, RewardMode mode) {
  if (mode == RewardMode::kSlotCount) {
    std::transform(group.slots.begin(), group.slots.end(), group.rewards.begin(),
                   [](std::size_t s) { return static_cast<double>(s); });
    group.advantages = zscore_advantages(group.rewards);
  }
  return group;
}

EpsilonGreedySelector::EpsilonGreedySelector(double epsilon, StrategyMix strategies, std::size_t k)
    : epsilon_(epsilon), strategies_(std::move(strategies)), k_(k) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in [0, 1]");
}

std::optional<Question> EpsilonGreedySelector::select(const BeliefState& belief, Rng& rng) const {
  if (epsilon_ > 0.0 && uniform01(rng) < epsilon_) {
    CandidateSet set = generate_candidates(belief, strategies_, k_, rng);
    Question q = set.candidates[uniform_index(rng, set.size())];
    q.origin = QuestionOrigin::kPolicy;
    return q;
  }
  return GreedyEntropySelector().select(belief, rng);
}

std::string EpsilonGreedySelector::id() const {
  char buf[48];
  std::snprintf(buf, sizeof buf, "epsilon-greedy(%.2f)", epsilon_);
  return buf;
}

// -- dataset --------------------------------------------------------------------------

Dataset build_dataset(const WorldModel& world_model, const std::vector<Specification>& training_split,
                      const QuestionSelector& rollout, const DatasetConfig& config) {
  if (training_split.empty()) throw ValidationError("build_dataset: empty training split");
  config.persona.validate();
  world_model.validate();
  std::vector<std::vector<PreferenceGroup>> per_dialogue(training_split.size());

  parallel_for(
      training_split.size(),
      [&](std::size_t d) {
        char id[32];
        std::snprintf(id, sizeof id, "d%05zu", d);
        DialogueConfig dc;
        dc.tau_bits = config.tau_bits;
        dc.max_turns = config.max_turns;
        dc.seed = derive_seed(config.seed, "rollout", d);
        dc.parser = config.parser;
        dc.gateway = config.gateway;
        const Specification& truth = training_split[d];
        const Transcript transcript = run_dialogue(rollout, config.persona, world_model, truth, dc, id);

        std::vector<std::size_t> turns(transcript.turns.size());
        std::iota(turns.begin(), turns.end(), 0);
        if (config.groups_per_dialogue > 0 && config.groups_per_dialogue < turns.size()) {
          Rng pick(derive_seed(config.seed, "group-turns", d));
          shuffle(turns, pick);
          turns.resize(config.groups_per_dialogue);
          std::sort(turns.begin(), turns.end());
        }
        const BeliefState initial = init_belief(world_model);
        for (std::size_t t : turns) {
          const BeliefState& before = t == 0 ? initial : *transcript.turns[t - 1].belief_after;
          Rng cand_rng(derive_seed(derive_seed(config.seed, "candidates", d), "turn", t));
          CandidateSet set = generate_candidates(before, config.strategies, config.k, cand_rng,
                                                 render_history(transcript, t));
          PreferenceGroup group =
              score_group(set, config.persona, truth, before,
                          derive_seed(derive_seed(config.seed, "answers", d), "turn", t), config.parser,
                          config.gateway);
          group.dialogue_id = id;
          group.turn = t;
          group.belief_ref = std::string(id) + "/" + std::to_string(t);
          per_dialogue[d].push_back(std::move(group));
        }
      },
      config.threads);

  Dataset dataset;
  dataset.stats.dialogues = training_split.size();
  double best_sum = 0.0;
  for (auto& groups : per_dialogue) {
    for (auto& g : groups) {
      const auto [lo, hi] = std::minmax_element(g.rewards.begin(), g.rewards.end());
      if (*hi - *lo < 1e-12) ++dataset.stats.constant_groups;
      best_sum += *hi;
      for (double r : g.rewards) {
        ++dataset.stats.reward_histogram[static_cast<std::size_t>(std::floor(std::max(0.0, r)))];
      }
      dataset.groups.push_back(std::move(g));
    }
  }
  dataset.stats.groups = dataset.groups.size();
  if (!dataset.groups.empty()) {
    dataset.stats.mean_best_reward = best_sum / static_cast<double>(dataset.groups.size());
  }
  return dataset;
}

std::string serialize_group(const PreferenceGroup& group) {
  json j;
  j["prompt"] = group.prompt;
  j["responses"] = group.responses;
  j["reward"] = group.rewards;
  j["advantage"] = group.advantages;
  j["meta"] = {{"dialogue_id", group.dialogue_id},
               {"turn", group.turn},
               {"ground_truth_id", group.ground_truth_id},
               {"belief_ref", group.belief_ref},
               {"targets", group.targets},
               {"slots", group.slots}};
  return j.dump();
}

std::string serialize_belief_sidecar(const std::vector<PreferenceGroup>& groups) {
  std::string out;
  std::set<std::string> written;
  for (const auto& g : groups) {
    if (!written.insert(g.belief_ref).second) continue;
    json j;
    j["ref"] = g.belief_ref;
    j["belief"] = json::parse(serialize_belief(g.belief));
    out += j.dump() + "\n";
  }
  return out;
}

std::string serialize_stats(const DatasetStats& stats) {
  json j;
  j["dialogues"] = stats.dialogues;
  j["groups"] = stats.groups;
  j["constant_groups"] = stats.constant_groups;
  j["mean_best_reward"] = round_decimals(stats.mean_best_reward, 6);
  json hist = json::object();
  for (const auto& [bin, count] : stats.reward_histogram) {
    hist["[" + std::to_string(bin) + "," + std::to_string(bin + 1) + ")"] = count;
  }
  j["reward_histogram_bits"] = hist;
  return j.dump(2) + "\n";
}

std::string belief_sidecar_path(const std::string& dataset_path) { return dataset_path + ".beliefs.jsonl"; }
std::string stats_path(const std::string& dataset_path) { return dataset_path + ".stats.json"; }

void write_dataset(const Dataset& dataset, const std::string& path) {
  std::string body;
  for (const auto& g : dataset.groups) body += serialize_group(g) + "\n";
  write_text_file(path, body);
  write_text_file(belief_sidecar_path(path), serialize_belief_sidecar(dataset.groups));
  write_text_file(stats_path(path), serialize_stats(dataset.stats));
}

std::vector<PreferenceGroup> parse_dataset(SchemaPtr schema, const std::string& jsonl,
                                           const std::string& beliefs_jsonl) {
  std::unordered_map<std::string, BeliefState> beliefs;
  {
    std::istringstream in(beliefs_jsonl);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json j = json::parse(line);
      beliefs.emplace(j.at("ref").get<std::string>(), parse_belief(schema, j.at("belief").dump()));
    }
  }
  std::vector<PreferenceGroup> groups;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "prefdata line " + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      PreferenceGroup g;
      g.prompt = j.at("prompt").get<std::string>();
      g.responses = j.at("responses").get<std::vector<std::string>>();
      g.rewards = j.at("reward").get<std::vector<double>>();
      g.advantages = j.at("advantage").get<std::vector<double>>();
      const json& meta = j.at("meta");
      g.dialogue_id = meta.value("dialogue_id", "");
      g.turn = meta.value("turn", std::size_t{0});
      g.ground_truth_id = meta.value("ground_truth_id", "");
      g.belief_ref = meta.at("belief_ref").get<std::string>();
      g.targets = meta.at("targets").get<std::vector<std::vector<std::string>>>();
      g.slots = meta.at("slots").get<std::vector<std::size_t>>();
      const std::size_t k = g.responses.size();
      if (k < 2 || g.rewards.size() != k || g.advantages.size() != k || g.targets.size() != k ||
          g.slots.size() != k) {
        throw ValidationError(where + ": group fields have mismatched sizes");
      }
      auto it = beliefs.find(g.belief_ref);
      if (it == beliefs.end()) throw ValidationError(where + ": unknown belief_ref '" + g.belief_ref + "'");
      g.belief = it->second;
      groups.push_back(std::move(g));
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return groups;
}

std::vector<PreferenceGroup> load_dataset(SchemaPtr schema, const std::string& path) {
  return parse_dataset(std::move(schema), read_text_file(path), read_text_file(belief_sidecar_path(path)));
}

}  // namespace inquiry
