// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace inquiry {

using json = nlohmann::ordered_json;

std::vector<double> cumulative_ig_curve(const Transcript& transcript, std::size_t max_turn) {
  std::vector<double> curve(max_turn + 1, 0.0);
  double total = 0.0;
  for (std::size_t t = 1; t <= max_turn; ++t) {
    if (t <= transcript.turns.size()) total += transcript.turns[t - 1].reward.ig_bits;
    curve[t] = total;
  }
  return curve;
}

RunSummary summarize_runs(const std::vector<Transcript>& transcripts, const std::vector<std::size_t>& checkpoints) {
  if (transcripts.empty()) throw ValidationError("summarize_runs: no transcripts");
  RunSummary s;
  s.policy_id = transcripts.front().policy_id;
  s.persona = transcripts.front().persona;
  s.n_dialogues = transcripts.size();
  const std::size_t max_checkpoint =
      checkpoints.empty() ? 0 : *std::max_element(checkpoints.begin(), checkpoints.end());
  std::vector<double> curve_sum(max_checkpoint + 1, 0.0);
  for (const auto& t : transcripts) {
    if (t.policy_id != s.policy_id || t.persona != s.persona) {
      throw ValidationError("summarize_runs: transcripts mix policy/persona cells");
    }
    s.mean_turns += static_cast<double>(t.turns.size());
    s.mean_total_ig += t.cumulative_ig();
    s.mean_initial_entropy += t.initial_entropy;
    ++s.stop_reasons[to_string(t.stop_reason)];
    for (const auto& turn : t.turns) {
      if (turn.reward.non_singleton) ++s.non_singleton_turns;
    }
    const auto curve = cumulative_ig_curve(t, max_checkpoint);
    for (std::size_t c = 0; c <= max_checkpoint; ++c) curve_sum[c] += curve[c];
  }
  const auto n = static_cast<double>(transcripts.size());
  s.mean_turns /= n;
  s.mean_total_ig /= n;
  s.mean_initial_entropy /= n;
  for (std::size_t c : checkpoints) s.ig_at_turn[c] = curve_sum[c] / n;
  return s;
}

std::vector<Transcript> run_batch(const QuestionSelector& policy, const OraclePersona& persona,
                                  const WorldModel& world_model, const std::vector<Specification>& specs,
                                  const EvalConfig& config) {
  if (specs.empty()) throw ValidationError("run_batch: no evaluation specifications");
  std::vector<Transcript> out(specs.size());
  parallel_for(
      specs.size(),
      [&](std::size_t i) {
        DialogueConfig dc;
        dc.tau_bits = config.tau_bits;
        dc.max_turns = config.max_turns;
        dc.seed = derive_seed(config.seed, "eval", i);
        dc.parser = config.parser;
        dc.gateway = config.gateway;
        dc.keep_beliefs = config.keep_beliefs;
        char id[32];
        std::snprintf(id, sizeof id, "e%05zu", i);
        out[i] = run_dialogue(policy, persona, world_model, specs[i], dc, id);
      },
      config.threads);
  return out;
}

PersonaComparison compare_personas(const QuestionSelector& policy, const std::vector<OraclePersona>& personas,
                                   const WorldModel& world_model, const std::vector<Specification>& specs,
                                   const EvalConfig& config) {
  if (personas.empty()) throw ValidationError("compare_personas: no personas");
  PersonaComparison cmp;
  for (const auto& persona : personas) {
    cmp.summaries.push_back(summarize_runs(run_batch(policy, persona, world_model, specs, config)));
  }
  const RunSummary& base = cmp.summaries.front();
  for (const auto& s : cmp.summaries) {
    cmp.turn_deltas.push_back(s.mean_turns - base.mean_turns);
    cmp.ig_deltas.push_back(s.mean_total_ig - base.mean_total_ig);
    if (std::abs(cmp.ig_deltas.back()) > 1e-6) cmp.ig_parity = false;
  }
  return cmp;
}

// -- win rates ------------------------------------------------------------------------------

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kWin: return "win";
    case Outcome::kTie: return "tie";
    case Outcome::kLoss: return "loss";
  }
  return "tie";
}

Outcome outcome_from_string(const std::string& text) {
  if (text == "win") return Outcome::kWin;
  if (text == "tie") return Outcome::kTie;
  if (text == "loss") return Outcome::kLoss;
  throw ValidationError("unknown judgment outcome '" + text + "'");
}

std::string to_string(WinProtocol protocol) {
  switch (protocol) {
    case WinProtocol::kWin: return "win";
    case WinProtocol::kWtHalf: return "wt_half";
    case WinProtocol::kWtFull: return "wt_full";
  }
  return "win";
}

WinProtocol win_protocol_from_string(const std::string& text) {
  if (text == "win") return WinProtocol::kWin;
  if (text == "wt_half") return WinProtocol::kWtHalf;
  if (text == "wt_full") return WinProtocol::kWtFull;
  throw ValidationError("unknown win-rate protocol '" + text + "'");
}

namespace {
std::size_t count(const JudgmentSet& set, Outcome o) {
  return static_cast<std::size_t>(std::count_if(set.records.begin(), set.records.end(),
                                                [o](const Judgment& j) { return j.outcome == o; }));
}
}  // namespace

std::size_t JudgmentSet::wins() const { return count(*this, Outcome::kWin); }
std::size_t JudgmentSet::ties() const { return count(*this, Outcome::kTie); }
std::size_t JudgmentSet::losses() const { return count(*this, Outcome::kLoss); }

double win_rate(const JudgmentSet& judgments, WinProtocol protocol) {
  const std::size_t n = judgments.records.size();
  if (n == 0) throw ValidationError("win_rate: empty judgment set");
  const auto w = static_cast<double>(judgments.wins());
  const auto t = static_cast<double>(judgments.ties());
  switch (protocol) {
    case WinProtocol::kWin: return w / static_cast<double>(n);
    case WinProtocol::kWtHalf: return (w + 0.5 * t) / static_cast<double>(n);
    case WinProtocol::kWtFull: return (w + t) / static_cast<double>(n);
  }
  return 0.0;
}

JudgmentSet parse_judgments(const std::string& csv) {
  JudgmentSet set;
  std::istringstream in(csv);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!header_seen) {
      header_seen = true;
      if (fields == std::vector<std::string>{"item_id", "judge_id", "renderer_id", "outcome"}) continue;
      throw ValidationError("judgments CSV must start with header item_id,judge_id,renderer_id,outcome");
    }
    if (fields.size() != 4) {
      throw ValidationError("judgments line " + std::to_string(line_no) + ": expected 4 fields");
    }
    set.records.push_back({fields[0], fields[1], fields[2], outcome_from_string(fields[3])});
  }
  return set;
}

JudgmentSet load_judgments(const std::string& path) { return parse_judgments(read_text_file(path)); }

// -- reports -----------------------------------------------------------------------------------

namespace {

json summary_to_json(const RunSummary& s) {
  json j;
  j["policy_id"] = s.policy_id;
  j["persona"] = s.persona;
  j["n_dialogues"] = s.n_dialogues;
  j["mean_turns"] = round_decimals(s.mean_turns, 6);
  j["mean_total_ig_bits"] = round_decimals(s.mean_total_ig, 6);
  j["mean_initial_entropy_bits"] = round_decimals(s.mean_initial_entropy, 6);
  json ig = json::object();
  for (const auto& [turn, bits] : s.ig_at_turn) ig[std::to_string(turn)] = round_decimals(bits, 6);
  j["ig_at_turn_bits"] = ig;
  json reasons = json::object();
  for (const auto& [reason, n] : s.stop_reasons) reasons[reason] = n;
  j["stop_reasons"] = reasons;
  j["non_singleton_turns"] = s.non_singleton_turns;
  return j;
}

}  // namespace

std::string summary_json(const RunSummary& summary) { return summary_to_json(summary).dump(2) + "\n"; }

std::string summaries_json(const std::vector<RunSummary>& summaries) {
  json arr = json::array();
  for (const auto& s : summaries) arr.push_back(summary_to_json(s));
  return arr.dump(2) + "\n";
}

std::string summary_table(const std::vector<RunSummary>& summaries) {
  std::vector<std::size_t> turns;
  for (const auto& s : summaries) {
    for (const auto& [t, _] : s.ig_at_turn) {
      if (std::find(turns.begin(), turns.end(), t) == turns.end()) turns.push_back(t);
    }
  }
  std::sort(turns.begin(), turns.end());
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"policy", "persona", "n", "turns", "total IG (bits)"};
  for (std::size_t t : turns) header.push_back("Turn " + std::to_string(t));
  rows.push_back(header);
  char buf[64];
  for (const auto& s : summaries) {
    std::vector<std::string> row{s.policy_id, s.persona, std::to_string(s.n_dialogues)};
    std::snprintf(buf, sizeof buf, "%.2f", s.mean_turns);
    row.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "%.2f", s.mean_total_ig);
    row.emplace_back(buf);
    for (std::size_t t : turns) {
      auto it = s.ig_at_turn.find(t);
      if (it == s.ig_at_turn.end()) {
        row.emplace_back("-");
      } else {
        std::snprintf(buf, sizeof buf, "%.2f", it->second);
        row.emplace_back(buf);
      }
    }
    rows.push_back(row);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const std::string& cell = rows[r][c];
      const std::string pad(width[c] - cell.size(), ' ');
      line += c < 2 ? cell + pad : pad + cell;
      if (c + 1 < rows[r].size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c + 1 < width.size() ? 2 : 0);
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}

std::string ig_curve_csv(const std::vector<std::pair<RunSummary, std::vector<Transcript>>>& cells,
                         std::size_t max_turn) {
  std::string out = "policy,persona,turn,mean_cumulative_ig\n";
  char buf[64];
  for (const auto& [summary, transcripts] : cells) {
    std::vector<double> sum(max_turn + 1, 0.0);
    for (const auto& t : transcripts) {
      const auto curve = cumulative_ig_curve(t, max_turn);
      for (std::size_t i = 0; i <= max_turn; ++i) sum[i] += curve[i];
    }
    for (std::size_t i = 0; i <= max_turn; ++i) {
      std::snprintf(buf, sizeof buf, "%.6f", transcripts.empty() ? 0.0 : sum[i] / transcripts.size());
      out += summary.policy_id + "," + summary.persona + "," + std::to_string(i) + "," + buf + "\n";
    }
  }
  return out;
}

std::string comparison_json(const PersonaComparison& comparison) {
  json j;
  json arr = json::array();
  for (std::size_t i = 0; i < comparison.summaries.size(); ++i) {
    json s = summary_to_json(comparison.summaries[i]);
    s["delta_mean_turns"] = round_decimals(comparison.turn_deltas[i], 6);
    s["delta_mean_total_ig_bits"] = round_decimals(comparison.ig_deltas[i], 6);
    arr.push_back(s);
  }
  j["personas"] = arr;
  j["ig_parity"] = comparison.ig_parity;
  return j.dump(2) + "\n";
}

}  // namespace inquiry
