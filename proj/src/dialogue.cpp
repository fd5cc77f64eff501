// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/dialogue.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "inquiry/gateway.hpp"
#include "json.hpp"

namespace inquiry {

using json = nlohmann::ordered_json;

std::string to_string(QuestionOrigin origin) {
  switch (origin) {
    case QuestionOrigin::kTemplate: return "template";
    case QuestionOrigin::kPolicy: return "policy";
    case QuestionOrigin::kLlm: return "llm";
  }
  return "template";
}

QuestionOrigin question_origin_from_string(const std::string& text) {
  if (text == "template") return QuestionOrigin::kTemplate;
  if (text == "policy") return QuestionOrigin::kPolicy;
  if (text == "llm") return QuestionOrigin::kLlm;
  throw ValidationError("unknown question origin '" + text + "'");
}

std::string to_string(PersonaKind kind) {
  switch (kind) {
    case PersonaKind::kExpert: return "expert";
    case PersonaKind::kNovice: return "novice";
    case PersonaKind::kNoisy: return "noisy";
  }
  return "expert";
}

PersonaKind persona_kind_from_string(const std::string& text) {
  if (text == "expert") return PersonaKind::kExpert;
  if (text == "novice") return PersonaKind::kNovice;
  if (text == "noisy") return PersonaKind::kNoisy;
  throw ValidationError("unknown oracle persona '" + text + "'");
}

std::string to_string(ParserMode mode) {
  return mode == ParserMode::kStructured ? "structured" : "gateway";
}

ParserMode parser_mode_from_string(const std::string& text) {
  if (text == "structured") return ParserMode::kStructured;
  if (text == "gateway") return ParserMode::kGateway;
  throw ValidationError("unknown parser mode '" + text + "'");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kEntropyThreshold: return "entropy-threshold";
    case StopReason::kTurnBudget: return "turn-budget";
    case StopReason::kPolicyStop: return "policy-stop";
  }
  return "entropy-threshold";
}

StopReason stop_reason_from_string(const std::string& text) {
  if (text == "entropy-threshold") return StopReason::kEntropyThreshold;
  if (text == "turn-budget") return StopReason::kTurnBudget;
  if (text == "policy-stop") return StopReason::kPolicyStop;
  throw ValidationError("unknown stop reason '" + text + "'");
}

// -- questions ---------------------------------------------------------------------

namespace {

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += (i + 1 == labels.size()) ? " and " : ", ";
    out += labels[i];
  }
  return out;
}

std::string join_values(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += (i + 1 == values.size()) ? " or " : ", ";
    out += values[i];
  }
  return out;
}

}  // namespace

std::string render_question(const Schema& schema, const std::vector<std::string>& targets) {
  if (targets.empty()) return "Is there anything else you would like to tell me?";
  std::vector<std::string> labels;
  for (const auto& id : targets) labels.push_back(schema.attribute(schema.require_index(id)).label);
  if (labels.size() == 1) return "What " + labels[0] + " would you like for the diagram?";
  return "Could you specify the " + join_labels(labels) + "?";
}

Question make_question(const Schema& schema, std::vector<std::string> targets,
                       QuestionOrigin origin) {
  Question q;
  q.text = render_question(schema, targets);
  q.targets = std::move(targets);
  q.origin = origin;
  return q;
}

void validate_question(const Schema& schema, const Question& question) {
  if (question.text.empty()) throw ValidationError("question has empty surface text");
  std::vector<std::string> seen;
  for (const auto& id : question.targets) {
    schema.require_index(id);
    if (std::find(seen.begin(), seen.end(), id) != seen.end()) {
      throw ValidationError("question targets '" + id + "' twice");
    }
    seen.push_back(id);
  }
}

// -- oracle --------------------------------------------------------------------------

void OraclePersona::validate() const {
  if (!(reveal_fraction >= 0.0 && reveal_fraction <= 1.0)) {
    throw ValidationError("reveal fraction must lie in [0, 1]");
  }
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ValidationError("noise rate must lie in [0, 1]");
  if (subset_coarseness < 1) throw ValidationError("subset coarseness must be at least 1");
  if (kind == PersonaKind::kNovice && reveal_fraction == 0.0) {
    throw ValidationError("a novice oracle with reveal fraction 0 never answers; dialogues would not terminate");
  }
}

AnswerModel OraclePersona::answer_model() const {
  if (kind == PersonaKind::kNovice) return AnswerModel::partial_reveal(reveal_fraction, subset_coarseness);
  return AnswerModel::full_reveal();
}

std::string OraclePersona::describe() const {
  char buf[96];
  switch (kind) {
    case PersonaKind::kNovice:
      std::snprintf(buf, sizeof buf, "novice(reveal=%.2f,coarse=%zu)", reveal_fraction, subset_coarseness);
      return buf;
    case PersonaKind::kNoisy:
      std::snprintf(buf, sizeof buf, "noisy(rate=%.2f)", noise_rate);
      return buf;
    case PersonaKind::kExpert: break;
  }
  return "expert";
}

namespace {

constexpr const char* kNoisePool[] = {
    "By the way, my coffee went cold while I was writing this.",
    "Our lab moved to a new building last spring.",
    "I also need to finish a grant report this week.",
    "My advisor prefers fonts with serifs, but that is a separate story.",
    "The conference deadline is in two weeks.",
    "I drew something similar on a whiteboard yesterday.",
    "It has been raining all day here.",
    "I am writing this from a train.",
};

}  // namespace

Answer oracle_answer(const OraclePersona& persona, const Schema& schema,
                     const Specification& ground_truth, const Question& question, Rng& turn_rng) {
  persona.validate();
  validate_question(schema, question);
  const auto truth = value_indices(schema, ground_truth);

  Answer answer;
  std::vector<std::string> sentences;
  for (const auto& id : question.targets) {
    const std::size_t i = schema.require_index(id);
    const Attribute& a = schema.attribute(i);
    const std::string& value = a.domain[truth[i]];
    if (persona.kind != PersonaKind::kNovice) {
      answer.revealed[id] = {value};
      sentences.push_back("The " + a.label + " should be " + value + ".");
      continue;
    }
    if (uniform01(turn_rng) >= persona.reveal_fraction) {
      sentences.push_back("I'm not sure about the " + a.label + ".");
      continue;
    }
    const std::size_t c = effective_coarseness(persona.subset_coarseness, a.size());
    std::vector<std::size_t> others;
    for (std::size_t v = 0; v < a.size(); ++v) {
      if (v != truth[i]) others.push_back(v);
    }
    shuffle(others, turn_rng);
    std::vector<std::size_t> subset(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(c - 1));
    subset.push_back(truth[i]);
    std::sort(subset.begin(), subset.end());
    std::vector<std::string> values;
    for (std::size_t v : subset) values.push_back(a.domain[v]);
    if (values.size() == 1) {
      sentences.push_back("I think the " + a.label + " is " + values[0] + ".");
    } else {
      sentences.push_back("For the " + a.label + ", maybe " + join_values(values) + ".");
    }
    answer.revealed[id] = std::move(values);
  }
  if (question.targets.empty()) sentences.push_back("I don't have a preference about that.");

  if (persona.kind == PersonaKind::kNoisy && uniform01(turn_rng) < persona.noise_rate) {
    const std::size_t pool = std::size(kNoisePool);
    const std::size_t count = 1 + (uniform01(turn_rng) < 0.5 ? 1 : 0);
    for (std::size_t n = 0; n < count; ++n) {
      std::string span = kNoisePool[uniform_index(turn_rng, pool)];
      const std::size_t at = uniform_index(turn_rng, sentences.size() + 1);
      sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(at), span);
      answer.noise_spans.push_back(std::move(span));
    }
  }
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (s > 0) answer.text += ' ';
    answer.text += sentences[s];
  }
  return answer;
}

Evidence parse_answer(ParserMode mode, const Schema& schema, const Question& question,
                      const Answer& answer, Gateway* gateway) {
  if (mode == ParserMode::kGateway) {
    if (gateway == nullptr) throw ValidationError("gateway parser mode needs a configured gateway");
    return parse_freetext_answer(*gateway, question, answer.text, schema);
  }
  Evidence evidence;
  evidence.provenance = EvidenceProvenance::kParser;
  evidence.constraints = answer.revealed;
  validate_evidence(schema, evidence);
  return evidence;
}

// -- selection ---------------------------------------------------------------------------

std::optional<Question> GreedyEntropySelector::select(const BeliefState& belief, Rng&) const {
  std::optional<std::size_t> best;
  double best_h = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (belief.resolved(i)) continue;
    const double h = belief.marginal_entropy(i);
    if (!best || h > best_h) {
      best = i;
      best_h = h;
    }
  }
  if (!best) return std::nullopt;
  return make_question(belief.schema(), {belief.schema().attribute(*best).id});
}

// -- dialogue loop ----------------------------------------------------------------------

double Transcript::cumulative_ig() const {
  double sum = 0.0;
  for (const auto& t : turns) sum += t.reward.ig_bits;
  return sum;
}

std::vector<double> Transcript::rewards() const {
  std::vector<double> out;
  out.reserve(turns.size());
  for (const auto& t : turns) out.push_back(t.reward.ig_bits);
  return out;
}

std::vector<FinalValue> final_specification(const BeliefState& belief) {
  std::vector<FinalValue> out;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const auto& a = belief.schema().attribute(i);
    const std::size_t m = belief.mode(i);
    out.push_back({a.id, a.domain[m], belief.resolved(i),
                   belief.distribution(i)(static_cast<Eigen::Index>(m))});
  }
  return out;
}

std::string render_history(const Transcript& transcript, std::size_t up_to_turn) {
  std::string out = "User: " + transcript.initial_request;
  const std::size_t n = std::min(up_to_turn, transcript.turns.size());
  for (std::size_t t = 0; t < n; ++t) {
    out += "\nAssistant: " + transcript.turns[t].question.text;
    out += "\nUser: " + transcript.turns[t].answer.text;
  }
  return out;
}

Transcript run_dialogue(const QuestionSelector& policy, const OraclePersona& persona,
                        const WorldModel& world_model, const Specification& ground_truth,
                        const DialogueConfig& config, std::string dialogue_id) {
  persona.validate();
  if (config.max_turns < 1) throw ValidationError("turn budget must be at least 1");
  if (!(config.tau_bits >= 0.0)) throw ValidationError("entropy threshold must be nonnegative");
  const Schema& schema = *world_model.schema;
  validate_specification(schema, ground_truth);

  Transcript transcript;
  transcript.dialogue_id = std::move(dialogue_id);
  transcript.policy_id = policy.id();
  transcript.persona = persona.describe();
  transcript.ground_truth_id = ground_truth.id;

  BeliefState belief = init_belief(world_model);
  transcript.initial_entropy = total_entropy(belief);
  Rng policy_rng(derive_seed(config.seed, "policy"));
  const std::uint64_t oracle_seed = derive_seed(config.seed, "oracle", persona.seed);

  while (true) {
    if (total_entropy(belief) <= config.tau_bits) {
      transcript.stop_reason = StopReason::kEntropyThreshold;
      break;
    }
    if (transcript.turns.size() >= config.max_turns) {
      transcript.stop_reason = StopReason::kTurnBudget;
      break;
    }
    auto question = policy.select(belief, policy_rng);
    if (!question) {
      transcript.stop_reason = StopReason::kPolicyStop;
      break;
    }
    TurnRecord turn;
    Rng turn_rng(derive_seed(oracle_seed, "turn", transcript.turns.size()));
    turn.answer = oracle_answer(persona, schema, ground_truth, *question, turn_rng);
    turn.evidence = parse_answer(config.parser, schema, *question, turn.answer, config.gateway);
    turn.reward = apply_evidence_inplace(belief, turn.evidence, config.contradictions);
    turn.question = std::move(*question);
    if (config.keep_beliefs) turn.belief_after = belief;
    transcript.turns.push_back(std::move(turn));
  }
  transcript.final_entropy = total_entropy(belief);
  transcript.final_specification = final_specification(belief);
  return transcript;
}

// -- consolidation --------------------------------------------------------------------------

namespace {

std::string structured_block(const Transcript& transcript) {
  std::size_t resolved = 0;
  for (const auto& v : transcript.final_specification) resolved += v.resolved ? 1 : 0;
  std::ostringstream out;
  out << "Diagram specification (" << transcript.final_specification.size() << " attributes, "
      << resolved << " resolved):\n";
  char p[32];
  for (const auto& v : transcript.final_specification) {
    out << "- " << v.id << ": ";
    if (v.resolved) {
      out << v.value << '\n';
    } else {
      std::snprintf(p, sizeof p, "%.3f", v.probability);
      out << "unspecified (best guess: " << v.value << ", p=" << p << ")\n";
    }
  }
  return out.str();
}

}  // namespace

std::string consolidate_description(const Transcript& transcript, DescriptionMode mode,
                                    Gateway* gateway) {
  const std::string block = structured_block(transcript);
  if (mode == DescriptionMode::kStructured) return block;
  if (gateway == nullptr) {
    warn("no gateway configured for prose consolidation; using the structured description");
    return block;
  }
  try {
    std::string prose = gateway->complete(
        prompts::fill(prompts::get("consolidate_v1"), {{"specification", block}}));
    while (!prose.empty() && std::isspace(static_cast<unsigned char>(prose.back()))) prose.pop_back();
    return prose + "\n\n" + block;
  } catch (const GatewayError& e) {
    warn(std::string("prose consolidation failed (") + e.what() + "); using the structured description");
    return block;
  }
}

// -- transcript JSONL -----------------------------------------------------------------------

std::string serialize_transcript(const Transcript& transcript) {
  std::string out;
  json header;
  header["record"] = "header";
  header["dialogue_id"] = transcript.dialogue_id;
  header["policy"] = transcript.policy_id;
  header["persona"] = transcript.persona;
  header["ground_truth_id"] = transcript.ground_truth_id;
  header["initial_request"] = transcript.initial_request;
  header["initial_entropy"] = transcript.initial_entropy;
  out += header.dump() + "\n";

  for (std::size_t t = 0; t < transcript.turns.size(); ++t) {
    const TurnRecord& turn = transcript.turns[t];
    json j;
    j["record"] = "turn";
    j["dialogue_id"] = transcript.dialogue_id;
    j["t"] = t + 1;
    j["question"] = {{"targets", turn.question.targets},
                     {"text", turn.question.text},
                     {"origin", to_string(turn.question.origin)}};
    json revealed = json::object();
    for (const auto& [id, values] : turn.answer.revealed) revealed[id] = values;
    j["answer"] = {{"text", turn.answer.text}, {"revealed", revealed}, {"noise", turn.answer.noise_spans}};
    json evidence = json::object();
    for (const auto& [id, values] : turn.evidence.constraints) evidence[id] = values;
    j["evidence"] = evidence;
    json drops = json::object();
    for (const auto& [id, d] : turn.reward.drops) drops[id] = d;
    j["reward"] = {{"ig_bits", turn.reward.ig_bits},
                   {"drops", drops},
                   {"resolved", turn.reward.resolved_attributes},
                   {"slots", turn.reward.slots},
                   {"non_singleton", turn.reward.non_singleton}};
    j["belief_ref"] = transcript.dialogue_id + "/" + std::to_string(t + 1);
    if (turn.belief_after) j["belief"] = json::parse(serialize_belief(*turn.belief_after));
    out += j.dump() + "\n";
  }

  json footer;
  footer["record"] = "footer";
  footer["dialogue_id"] = transcript.dialogue_id;
  footer["stop_reason"] = to_string(transcript.stop_reason);
  footer["turns"] = transcript.turns.size();
  footer["cumulative_ig"] = transcript.cumulative_ig();
  footer["final_entropy"] = transcript.final_entropy;
  json final_spec = json::array();
  for (const auto& v : transcript.final_specification) {
    final_spec.push_back({{"id", v.id}, {"value", v.value}, {"resolved", v.resolved},
                          {"p", round_significant(v.probability, 12)}});
  }
  footer["final_specification"] = final_spec;
  out += footer.dump() + "\n";
  return out;
}

std::vector<Transcript> parse_transcripts(const SchemaPtr& schema_ptr, const std::string& jsonl) {
  const Schema& schema = *schema_ptr;
  std::vector<Transcript> out;
  std::istringstream in(jsonl);
  std::string line;
  std::optional<Transcript> current;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError("transcript line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string kind = j.value("record", "");
    if (kind == "header") {
      if (current) throw ValidationError("transcript line " + std::to_string(line_no) + ": header before footer");
      current.emplace();
      current->dialogue_id = j.value("dialogue_id", "");
      current->policy_id = j.value("policy", "");
      current->persona = j.value("persona", "");
      current->ground_truth_id = j.value("ground_truth_id", "");
      current->initial_request = j.value("initial_request", std::string(kInitialRequest));
      current->initial_entropy = j.value("initial_entropy", 0.0);
    } else if (kind == "turn") {
      if (!current) throw ValidationError("transcript line " + std::to_string(line_no) + ": turn outside a dialogue");
      TurnRecord turn;
      turn.question.targets = j["question"].value("targets", std::vector<std::string>{});
      turn.question.text = j["question"].value("text", "");
      turn.question.origin = question_origin_from_string(j["question"].value("origin", "template"));
      turn.answer.text = j["answer"].value("text", "");
      for (auto it = j["answer"]["revealed"].begin(); it != j["answer"]["revealed"].end(); ++it) {
        turn.answer.revealed[it.key()] = it.value().get<std::vector<std::string>>();
      }
      turn.answer.noise_spans = j["answer"].value("noise", std::vector<std::string>{});
      for (auto it = j["evidence"].begin(); it != j["evidence"].end(); ++it) {
        turn.evidence.constraints[it.key()] = it.value().get<std::vector<std::string>>();
      }
      turn.evidence.provenance = EvidenceProvenance::kParser;
      validate_evidence(schema, turn.evidence);
      const json& r = j["reward"];
      turn.reward.turn = j.value("t", current->turns.size() + 1);
      turn.reward.ig_bits = r.value("ig_bits", 0.0);
      for (auto it = r["drops"].begin(); it != r["drops"].end(); ++it) {
        turn.reward.drops[it.key()] = it.value().get<double>();
        turn.reward.constrained_sum_bits += it.value().get<double>();
      }
      turn.reward.resolved_attributes = r.value("resolved", std::vector<std::string>{});
      turn.reward.slots = r.value("slots", std::size_t{0});
      turn.reward.non_singleton = r.value("non_singleton", false);
      if (j.contains("belief")) turn.belief_after = parse_belief(schema_ptr, j["belief"].dump());
      current->turns.push_back(std::move(turn));
    } else if (kind == "footer") {
      if (!current) throw ValidationError("transcript line " + std::to_string(line_no) + ": footer without header");
      current->stop_reason = stop_reason_from_string(j.value("stop_reason", "entropy-threshold"));
      current->final_entropy = j.value("final_entropy", 0.0);
      for (const auto& v : j["final_specification"]) {
        current->final_specification.push_back(
            {v.value("id", ""), v.value("value", ""), v.value("resolved", false), v.value("p", 0.0)});
      }
      out.push_back(std::move(*current));
      current.reset();
    } else {
      throw ValidationError("transcript line " + std::to_string(line_no) + ": unknown record '" + kind + "'");
    }
  }
  if (current) throw ValidationError("transcript ends inside dialogue '" + current->dialogue_id + "'");
  return out;
}

}  // namespace inquiry
