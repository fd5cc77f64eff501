// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/cli.hpp"

#include <filesystem>
#include <functional>
#include <iostream>
#include <list>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "inquiry/datagen.hpp"
#include "inquiry/eval.hpp"
#include "inquiry/gateway.hpp"
#include "inquiry/pipeline.hpp"
#include "inquiry/policy.hpp"
#include "json.hpp"

namespace inquiry {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = 0;

  std::string schema, gen_config, corpus, worldmodel, dataset, held_out, policy, transcripts, judgments;
  std::size_t n = 1000;
  std::size_t offset = 0;
  double alpha = 1.0;

  std::string oracle = "expert";
  double reveal_fraction = 0.7;
  std::size_t coarseness = 2;
  double noise_rate = 0.5;
  std::uint64_t persona_seed = 0;
  double tau = 0.01;
  std::size_t max_turns = 30;

  std::size_t k = 8;
  std::size_t groups_per_dialogue = 0;
  double epsilon = 0.2;
  std::string strategy_weights = "1,1,1,1,0";

  std::string method = "grpo-offline";
  std::string reward = "entropy";
  std::size_t epochs = 5;
  double lr = 0.2;
  double clip_eps = 0.2;
  double kl_beta = 0.01;
  double dpo_beta = 0.1;
  std::size_t batch_size = 0;
  std::size_t warmup_epochs = 1;
  std::size_t dialogues_per_iter = 64;
  std::size_t inner_steps = 4;

  std::string selector = "policy";
  std::string mode = "greedy";
  std::string consolidate = "none";

  std::string checkpoints = "1,5,10,15,20";
  std::string format = "table";
  bool curve_csv = false;

  std::string protocol = "all";

  std::size_t train_dialogues = 300;
  std::size_t eval_dialogues = 200;
  std::size_t budget = 10;
  std::size_t persona_dialogues = 200;
  std::size_t persona_max_turns = 200;

  std::string parser = "structured";
  bool mock_gateway = false;
  std::string mock_script;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "INQUIRY_API_KEY";
  std::size_t timeout_ms = 30000;
  int max_retries = 3;
  double rate_limit = 0.0;

  std::string run_file;  // replay
};

/// Registers options on a subcommand and remembers how to write their
/// resolved values into run.json.
class Recorder {
 public:
  explicit Recorder(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    dump_.push_back([name, &var](json& j) { j[name] = var; });
    return app_->add_option("--" + name, var, help)->capture_default_str();
  }
  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    dump_.push_back([name, &var](json& j) { j[name] = var; });
    return app_->add_flag("--" + name, var, help);
  }
  json config() const {
    json j = json::object();
    for (const auto& d : dump_) d(j);
    return j;
  }
  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::function<void(json&)>> dump_;
};

struct RunLog {
  json inputs = json::object();
  std::vector<std::string> outputs;
};

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ValidationError("invalid " + what + " '" + text + "'");
    }
  }
  if (out.empty()) throw ValidationError("empty " + what);
  return out;
}

StrategyMix parse_strategy_weights(const std::string& text) {
  StrategyMix mix;
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= kStrategyCount) throw ValidationError("too many strategy weights in '" + text + "'");
    try {
      mix.weights[i++] = std::stod(item);
    } catch (const std::exception&) {
      throw ValidationError("invalid strategy weight '" + item + "'");
    }
  }
  if (i != kStrategyCount) {
    throw ValidationError("expected " + std::to_string(kStrategyCount) +
                          " strategy weights (per-attribute,multi-attribute,low-value,off-topic,gateway)");
  }
  mix.quotas(8);
  return mix;
}

OraclePersona make_persona(const Options& o) {
  OraclePersona p;
  p.kind = persona_kind_from_string(o.oracle);
  p.reveal_fraction = o.reveal_fraction;
  p.subset_coarseness = o.coarseness;
  p.noise_rate = o.noise_rate;
  p.seed = o.persona_seed;
  p.validate();
  return p;
}

class Command {
 public:
  Command(Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

  std::string path(const std::string& name) const { return (fs::path(o_.out_dir) / name).string(); }

  void output(const std::string& name, const std::string& body) {
    const std::string p = path(name);
    write_text_file(p, body);
    log_.outputs.push_back(p);
  }
  void produced(const std::string& p) { log_.outputs.push_back(p); }
  void input(const std::string& key, const std::string& p) {
    if (!p.empty()) log_.inputs[key] = p;
  }

  SchemaPtr schema() {
    input("schema", o_.schema);
    return load_schema(o_.schema);
  }

  Gateway* gateway(const SchemaPtr& schema, bool needed) {
    if (!needed) return nullptr;
    GatewayConfig gc;
    gc.endpoint_url = o_.endpoint;
    gc.model_name = o_.model;
    gc.api_key_env_var = o_.api_key_env;
    gc.timeout = std::chrono::milliseconds(o_.timeout_ms);
    gc.max_retries = o_.max_retries;
    gc.max_requests_per_second = o_.rate_limit;
    gc.mock_mode = o_.mock_gateway;
    if (o_.mock_gateway) {
      gc.strict_mock = false;
      gc.mock_responder = template_mirror_responder(schema);
      if (!o_.mock_script.empty()) {
        input("mock_script", o_.mock_script);
        try {
          gc.mock_script = json::parse(read_text_file(o_.mock_script)).get<std::map<std::string, std::string>>();
        } catch (const json::exception& e) {
          throw ValidationError(std::string("invalid mock script: ") + e.what());
        }
      }
    }
    gc.log_path = path("gateway_log.jsonl");
    write_text_file(gc.log_path, "");
    log_.outputs.push_back(gc.log_path);
    gateway_ = std::make_unique<Gateway>(std::move(gc));
    return gateway_.get();
  }

  void write_run_json(const std::string& command, const json& config) {
    if (gateway_) write_text_file(path("gateway_log.jsonl"), serialize_attempts(gateway_->attempts()));
    json j;
    j["tool_version"] = std::string(kToolVersion);
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = log_.inputs;
    std::vector<std::string> outputs = log_.outputs;
    const std::string run = path("run.json");
    outputs.push_back(run);
    j["outputs"] = outputs;
    write_text_file(run, j.dump(2) + "\n");
  }

  Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  RunLog log_;
  std::unique_ptr<Gateway> gateway_;
};

// -- commands ---------------------------------------------------------------------------

void cmd_gen_corpus(Command& c) {
  auto& o = c.o_;
  const SchemaPtr schema = c.schema();
  GenConfig gen = GenConfig::uniform(*schema);
  if (!o.gen_config.empty()) {
    c.input("gen_config", o.gen_config);
    gen = load_gen_config(*schema, o.gen_config);
  }
  const auto corpus = generate_corpus(*schema, gen, o.n, derive_seed(o.seed, "corpus"));
  c.output("corpus.jsonl", serialize_corpus(*schema, corpus));
  c.out_ << "wrote " << corpus.size() << " specifications to " << c.path("corpus.jsonl") << "\n";
}

void cmd_build_prior(Command& c) {
  auto& o = c.o_;
  const SchemaPtr schema = c.schema();
  c.input("corpus", o.corpus);
  const auto corpus = load_corpus(*schema, o.corpus);
  const WorldModel wm = estimate_prior(schema, corpus, o.alpha);
  c.output("worldmodel.json", serialize_world_model(wm));
  char buf[96];
  std::snprintf(buf, sizeof buf, "prior entropy %.4f bits over %zu attributes\n",
                total_entropy(init_belief(wm)), schema->size());
  c.out_ << buf;
}

std::vector<Specification> load_split(Command& c, const Schema& schema, bool use_window) {
  auto& o = c.o_;
  c.input("corpus", o.corpus);
  auto corpus = load_corpus(schema, o.corpus);
  if (!use_window) return corpus;
  if (o.offset > corpus.size()) throw ValidationError("--offset is past the end of the corpus");
  const std::size_t end = o.n == 0 ? corpus.size() : std::min(corpus.size(), o.offset + o.n);
  return {corpus.begin() + static_cast<std::ptrdiff_t>(o.offset), corpus.begin() + static_cast<std::ptrdiff_t>(end)};
}

WorldModel load_wm(Command& c, const SchemaPtr& schema) {
  c.input("worldmodel", c.o_.worldmodel);
  return load_world_model(schema, c.o_.worldmodel);
}

void cmd_datagen(Command& c) {
  auto& o = c.o_;
  const SchemaPtr schema = c.schema();
  const WorldModel wm = load_wm(c, schema);
  const auto specs = load_split(c, *schema, true);
  DatasetConfig dc;
  dc.persona = make_persona(o);
  dc.strategies = parse_strategy_weights(o.strategy_weights);
  dc.k = o.k;
  dc.groups_per_dialogue = o.groups_per_dialogue;
  dc.seed = derive_seed(o.seed, "datagen");
  dc.tau_bits = o.tau;
  dc.max_turns = o.max_turns;
  dc.parser = parser_mode_from_string(o.parser);
  dc.threads = o.threads;
  Gateway* gw = c.gateway(schema, dc.parser == ParserMode::kGateway ||
                                      dc.strategies.weight(CandidateStrategy::kGateway) > 0.0);
  dc.gateway = gw;
  dc.strategies.gateway = gw;
  std::unique_ptr<QuestionSelector> rollout;
  if (!o.policy.empty()) {
    c.input("policy", o.policy);
    rollout = std::make_unique<PolicySelector>(load_policy(o.policy), dc.strategies, o.k, SelectMode::kSample,
                                               "rollout-policy");
  } else {
    rollout = std::make_unique<EpsilonGreedySelector>(o.epsilon, dc.strategies, o.k);
  }
  const Dataset dataset = build_dataset(wm, specs, *rollout, dc);
  const std::string p = c.path("dataset.jsonl");
  write_dataset(dataset, p);
  c.produced(p);
  c.produced(belief_sidecar_path(p));
  c.produced(stats_path(p));
  c.out_ << serialize_stats(dataset.stats);
}

void cmd_train(Command& c) {
  auto& o = c.o_;
  const SchemaPtr schema = c.schema();
  TrainConfig tc;
  tc.method = train_method_from_string(o.method);
  tc.epochs = o.epochs;
  tc.learning_rate = o.lr;
  tc.clip_epsilon = o.clip_eps;
  tc.kl_beta = o.kl_beta;
  tc.dpo_beta = o.dpo_beta;
  tc.seed = derive_seed(o.seed, "train");
  tc.reward_mode = reward_mode_from_string(o.reward);
  tc.batch_size = o.batch_size;

  std::vector<PreferenceGroup> data;
  if (!o.dataset.empty()) {
    c.input("dataset", o.dataset);
    data = load_dataset(schema, o.dataset);
  } else if (tc.method != TrainMethod::kGrpoOnline) {
    throw ValidationError("--dataset is required for " + o.method);
  }
  std::vector<PreferenceGroup> held_out;
  if (!o.held_out.empty()) {
    c.input("held_out", o.held_out);
    held_out = load_dataset(schema, o.held_out);
  }
  std::optional<WorldModel> wm;
  if (tc.method == TrainMethod::kGrpoOnline) {
    if (o.worldmodel.empty() || o.corpus.empty()) {
      throw ValidationError("grpo-online needs --worldmodel and --corpus");
    }
    wm = load_wm(c, schema);
    tc.online.world_model = &*wm;
    tc.online.specs = load_split(c, *schema, true);
    tc.online.persona = make_persona(o);
    tc.online.strategies = parse_strategy_weights(o.strategy_weights);
    tc.online.k = o.k;
    tc.online.dialogues_per_iteration = o.dialogues_per_iter;
    tc.online.inner_steps = o.inner_steps;
    tc.online.warmup_epochs = o.warmup_epochs;
    tc.online.tau_bits = o.tau;
    tc.online.max_turns = o.max_turns;
    tc.online.threads = o.threads;
  }
  const TrainResult result = train(data, tc, held_out);
  c.output("policy.json", serialize_policy(result.params));
  c.output("train_log.csv", serialize_training_log(result.log));
  c.out_ << serialize_training_log(result.log);
  if (result.skipped_groups > 0) {
    c.err_ << "skipped " << result.skipped_groups << " constant-reward groups\n";
  }
}

std::unique_ptr<QuestionSelector> make_selector(Command& c) {
  auto& o = c.o_;
  const StrategyMix mix = parse_strategy_weights(o.strategy_weights);
  if (o.selector == "greedy-entropy") return std::make_unique<GreedyEntropySelector>();
  if (o.selector == "uniform-random") return std::make_unique<PolicySelector>(uniform_random_selector(mix, o.k));
  if (o.selector == "epsilon-greedy") return std::make_unique<EpsilonGreedySelector>(o.epsilon, mix, o.k);
  if (o.selector == "policy") {
    if (o.policy.empty()) throw ValidationError("--selector policy needs --policy");
    c.input("policy", o.policy);
    return std::make_unique<PolicySelector>(load_policy(o.policy), mix, o.k, select_mode_from_string(o.mode),
                                            fs::path(o.policy).stem().string());
  }
  throw ValidationError("unknown selector '" + o.selector + "'");
}

void cmd_simulate(Command& c) {
  auto& o = c.o_;
  const SchemaPtr schema = c.schema();
  const WorldModel wm = load_wm(c, schema);
  const auto specs = load_split(c, *schema, true);
  const auto persona = make_persona(o);
  const auto selector = make_selector(c);
  if (o.consolidate != "none" && o.consolidate != "structured" && o.consolidate != "gateway") {
    throw ValidationError("--consolidate must be none, structured or gateway");
  }
  EvalConfig ec;
  ec.tau_bits = o.tau;
  ec.max_turns = o.max_turns;
  ec.seed = derive_seed(o.seed, "simulate");
  ec.parser = parser_mode_from_string(o.parser);
  ec.keep_beliefs = true;
  ec.threads = o.threads;
  ec.gateway = c.gateway(schema, ec.parser == ParserMode::kGateway || o.consolidate == "gateway");
  const auto transcripts = run_batch(*selector, persona, wm, specs, ec);
  std::string body;
  for (const auto& t : transcripts) body += serialize_transcript(t);
  c.output("transcripts.jsonl", body);
  if (o.consolidate != "none") {
    std::string text;
    for (const auto& t : transcripts) {
      text += "## " + t.dialogue_id + "\n" +
              consolidate_description(t,
                                      o.consolidate == "gateway" ? DescriptionMode::kGateway
                                                                 : DescriptionMode::kStructured,
                                      ec.gateway) +
              "\n";
    }
    c.output("descriptions.txt", text);
  }
  c.out_ << summary_table({summarize_runs(transcripts)});
}

void cmd_eval(Command& c) {
  auto& o = c.o_;
  const SchemaPtr schema = c.schema();
  c.input("transcripts", o.transcripts);
  const auto transcripts = parse_transcripts(schema, read_text_file(o.transcripts));
  if (transcripts.empty()) throw ValidationError("no transcripts in " + o.transcripts);
  const auto checkpoints = parse_size_list(o.checkpoints, "checkpoint list");
  std::vector<std::pair<std::string, std::vector<Transcript>>> cells;
  for (const auto& t : transcripts) {
    const std::string key = t.policy_id + "\x1f" + t.persona;
    auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& cell) { return cell.first == key; });
    if (it == cells.end()) {
      cells.emplace_back(key, std::vector<Transcript>{});
      it = cells.end() - 1;
    }
    it->second.push_back(t);
  }
  std::vector<RunSummary> summaries;
  std::vector<std::pair<RunSummary, std::vector<Transcript>>> curves;
  std::size_t max_turn = 0;
  for (auto& [key, ts] : cells) {
    summaries.push_back(summarize_runs(ts, checkpoints));
    for (const auto& t : ts) max_turn = std::max(max_turn, t.turns.size());
    curves.emplace_back(summaries.back(), std::move(ts));
  }
  if (o.format == "json") {
    const std::string body = summaries_json(summaries);
    c.output("report.json", body);
    c.out_ << body;
  } else if (o.format == "table") {
    const std::string body = summary_table(summaries);
    c.output("report.txt", body);
    c.out_ << body;
  } else {
    throw ValidationError("--format must be json or table");
  }
  if (o.curve_csv) c.output("ig_curves.csv", ig_curve_csv(curves, max_turn));
}

void cmd_winrate(Command& c) {
  auto& o = c.o_;
  c.input("judgments", o.judgments);
  const JudgmentSet set = load_judgments(o.judgments);
  std::vector<WinProtocol> protocols;
  if (o.protocol == "all") {
    protocols = {WinProtocol::kWin, WinProtocol::kWtHalf, WinProtocol::kWtFull};
  } else {
    protocols = {win_protocol_from_string(o.protocol)};
  }
  json j;
  j["n"] = set.records.size();
  j["wins"] = set.wins();
  j["ties"] = set.ties();
  j["losses"] = set.losses();
  char buf[32];
  for (WinProtocol p : protocols) {
    const double rate = win_rate(set, p);
    std::snprintf(buf, sizeof buf, "%.3f", rate);
    j[to_string(p)] = rate;
    if (protocols.size() == 1) {
      c.out_ << buf << "\n";
    } else {
      c.out_ << to_string(p) << " " << buf << "\n";
    }
  }
  c.output("winrate.json", j.dump(2) + "\n");
}

void cmd_ablation(Command& c) {
  auto& o = c.o_;
  AblationConfig ac;
  ac.schema = c.schema();
  ac.gen = GenConfig::uniform(*ac.schema);
  if (!o.gen_config.empty()) {
    c.input("gen_config", o.gen_config);
    ac.gen = load_gen_config(*ac.schema, o.gen_config);
  }
  ac.seed = o.seed;
  ac.corpus_size = o.n;
  ac.alpha = o.alpha;
  ac.train_dialogues = o.train_dialogues;
  ac.eval_dialogues = o.eval_dialogues;
  ac.budget = o.budget;
  ac.persona_dialogues = o.persona_dialogues;
  ac.persona_max_turns = o.persona_max_turns;
  ac.k = o.k;
  ac.epsilon = o.epsilon;
  ac.train.epochs = o.epochs;
  ac.train.learning_rate = o.lr;
  ac.train.clip_epsilon = o.clip_eps;
  ac.train.kl_beta = o.kl_beta;
  ac.train.batch_size = o.batch_size;
  ac.parser = parser_mode_from_string(o.parser);
  ac.threads = o.threads;
  ac.gateway = c.gateway(ac.schema, ac.parser == ParserMode::kGateway);
  const AblationResult result = run_ablation(ac);
  for (const auto& p : write_ablation(result, o.out_dir)) c.produced(p);
  c.out_ << read_text_file(c.path("report.txt"));
}

// -- dispatch -----------------------------------------------------------------------------

void add_common(Recorder& r, Options& o, const std::string& default_out) {
  o.out_dir = default_out;
  r.add("seed", o.seed, "Global seed; every component seed derives from it");
  r.add("out-dir", o.out_dir, "Directory for outputs and run.json");
  r.add("threads", o.threads, "Worker threads (0 = hardware concurrency)");
}

void add_schema(Recorder& r, Options& o) {
  r.add("schema", o.schema, "Schema JSON")->required()->check(CLI::ExistingFile);
}

void add_persona(Recorder& r, Options& o) {
  r.add("oracle", o.oracle, "Oracle persona")->check(CLI::IsMember({"expert", "novice", "noisy"}));
  r.add("reveal-fraction", o.reveal_fraction, "Novice: probability of revealing anything");
  r.add("coarseness", o.coarseness, "Novice: values per revealed subset");
  r.add("noise-rate", o.noise_rate, "Noisy: probability of inserting noise");
  r.add("persona-seed", o.persona_seed, "Persona seed");
  r.add("tau", o.tau, "Entropy threshold in bits");
  r.add("max-turns", o.max_turns, "Turn budget");
}

void add_gateway(Recorder& r, Options& o) {
  r.add("parser", o.parser, "Answer parser")->check(CLI::IsMember({"structured", "gateway"}));
  r.flag("mock-gateway", o.mock_gateway, "Use the deterministic mock gateway");
  r.add("mock-script", o.mock_script, "JSON map of request hash to canned response")->check(CLI::ExistingFile);
  r.add("endpoint", o.endpoint, "Chat-completions endpoint URL");
  r.add("model", o.model, "Model name sent to the endpoint");
  r.add("api-key-env", o.api_key_env, "Environment variable holding the API key");
  r.add("timeout-ms", o.timeout_ms, "Request timeout in milliseconds");
  r.add("max-retries", o.max_retries, "Retries for transient failures");
  r.add("rate-limit", o.rate_limit, "Max requests per second (0 = uncapped)");
}

int run_replay(const Options& o, std::ostream& out, std::ostream& err) {
  json run;
  try {
    run = json::parse(read_text_file(o.run_file));
  } catch (const json::exception& e) {
    throw ValidationError("invalid run file: " + std::string(e.what()));
  }
  std::vector<std::string> args{run.at("command").get<std::string>()};
  for (const auto& [key, value] : run.at("config").items()) {
    if (key == "out-dir" && !o.out_dir.empty()) {
      args.push_back("--out-dir");
      args.push_back(o.out_dir);
    } else if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_string()) {
      if (!value.get<std::string>().empty()) {
        args.push_back("--" + key);
        args.push_back(value.get<std::string>());
      }
    } else {
      args.push_back("--" + key);
      args.push_back(value.dump());
    }
  }
  return run_cli(args, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Information-gain question asking: corpora, priors, preference data, training and evaluation",
               "inquiry"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  struct Sub {
    Options opts;
    Recorder rec;
    std::function<void(Command&)> handler;
  };
  std::list<Sub> subs;
  auto sub = [&](const std::string& name, const std::string& help, std::function<void(Command&)> fn) {
    CLI::App* s = app.add_subcommand(name, help);
    subs.push_back(Sub{Options{}, Recorder(s), std::move(fn)});
    return &subs.back();
  };

  {
    Sub* sc = sub("gen-corpus", "Generate a synthetic specification corpus", cmd_gen_corpus);
    Recorder* r = &sc->rec;
    Options& o = sc->opts;
    add_common(*r, o, "runs/gen-corpus");
    add_schema(*r, o);
    r->add("gen-config", o.gen_config, "Per-attribute sampling weights JSON")->check(CLI::ExistingFile);
    r->add("n", o.n, "Number of specifications")->check(CLI::PositiveNumber);
  }
  {
    Sub* sc = sub("build-prior", "Estimate the world-model prior from a corpus", cmd_build_prior);
    Recorder* r = &sc->rec;
    Options& o = sc->opts;
    add_common(*r, o, "runs/build-prior");
    add_schema(*r, o);
    r->add("corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    r->add("alpha", o.alpha, "Additive smoothing (0 = maximum likelihood)");
  }
  {
    Sub* sc = sub("datagen", "Generate preference groups from simulated dialogues", cmd_datagen);
    Recorder* r = &sc->rec;
    Options& o = sc->opts;
    add_common(*r, o, "runs/datagen");
    add_schema(*r, o);
    r->add("worldmodel", o.worldmodel, "World model JSON")->required()->check(CLI::ExistingFile);
    r->add("corpus", o.corpus, "Training split (corpus JSONL)")->required()->check(CLI::ExistingFile);
    o.n = 0;
    r->add("n", o.n, "Number of training specifications (0 = all)");
    r->add("offset", o.offset, "First specification used");
    add_persona(*r, o);
    r->add("k", o.k, "Candidates per group");
    r->add("groups-per-dialogue", o.groups_per_dialogue, "Groups harvested per dialogue (0 = every turn)");
    r->add("epsilon", o.epsilon, "Exploration rate of the greedy rollout policy");
    r->add("strategy-weights", o.strategy_weights,
           "Candidate mix: per-attribute,multi-attribute,low-value,off-topic,gateway");
    r->add("policy", o.policy, "Roll out with this policy (sampled) instead of epsilon-greedy")
        ->check(CLI::ExistingFile);
    add_gateway(*r, o);
  }
  {
    Sub* sc = sub("train", "Train the question-selection policy", cmd_train);
    Recorder* r = &sc->rec;
    Options& o = sc->opts;
    add_common(*r, o, "runs/train");
    add_schema(*r, o);
    r->add("dataset", o.dataset, "Preference dataset JSONL")->check(CLI::ExistingFile);
    r->add("held-out", o.held_out, "Held-out dataset for the top-1 column")->check(CLI::ExistingFile);
    r->add("method", o.method, "Training method")
        ->check(CLI::IsMember({"sft", "dpo", "grpo-offline", "grpo-online"}));
    r->add("reward", o.reward, "Reward used for training")->check(CLI::IsMember({"entropy", "slot-count"}));
    r->add("epochs", o.epochs, "Epochs (online: rollout iterations)");
    r->add("lr", o.lr, "Learning rate");
    r->add("clip-eps", o.clip_eps, "Ratio clip epsilon");
    r->add("kl-beta", o.kl_beta, "KL penalty weight");
    r->add("dpo-beta", o.dpo_beta, "DPO inverse temperature");
    r->add("batch-size", o.batch_size, "Groups per step (0 = full batch)");
    r->add("worldmodel", o.worldmodel, "World model (grpo-online)")->check(CLI::ExistingFile);
    r->add("corpus", o.corpus, "Training specifications (grpo-online)")->check(CLI::ExistingFile);
    o.n = 0;
    r->add("n", o.n, "Number of training specifications (0 = all)");
    r->add("offset", o.offset, "First specification used");
    add_persona(*r, o);
    r->add("k", o.k, "Candidates per group (grpo-online)");
    r->add("strategy-weights", o.strategy_weights, "Candidate mix (grpo-online)");
    r->add("warmup-epochs", o.warmup_epochs, "Supervised warm-up epochs (grpo-online)");
    r->add("dialogues-per-iter", o.dialogues_per_iter, "Rollout dialogues per iteration (grpo-online)");
    r->add("inner-steps", o.inner_steps, "Gradient steps per rollout batch (grpo-online)");
  }
  {
    Sub* sc = sub("simulate", "Run dialogues between a policy and a simulated oracle", cmd_simulate);
    Recorder* r = &sc->rec;
    Options& o = sc->opts;
    add_common(*r, o, "runs/simulate");
    add_schema(*r, o);
    r->add("worldmodel", o.worldmodel, "World model JSON")->required()->check(CLI::ExistingFile);
    r->add("corpus", o.corpus, "Ground-truth specifications")->required()->check(CLI::ExistingFile);
    o.n = 0;
    r->add("n", o.n, "Number of dialogues (0 = whole corpus)");
    r->add("offset", o.offset, "First specification used");
    r->add("selector", o.selector, "Question selector")
        ->check(CLI::IsMember({"policy", "greedy-entropy", "uniform-random", "epsilon-greedy"}));
    r->add("policy", o.policy, "Policy JSON (selector=policy)")->check(CLI::ExistingFile);
    r->add("mode", o.mode, "Policy selection mode")->check(CLI::IsMember({"greedy", "sample"}));
    r->add("k", o.k, "Candidates per turn");
    r->add("epsilon", o.epsilon, "Exploration rate (selector=epsilon-greedy)");
    r->add("strategy-weights", o.strategy_weights, "Candidate mix");
    r->add("consolidate", o.consolidate, "Final description: none, structured or gateway");
    add_persona(*r, o);
    add_gateway(*r, o);
  }
  {
    Sub* sc = sub("eval", "Summarize transcripts per policy and persona", cmd_eval);
    Recorder* r = &sc->rec;
    Options& o = sc->opts;
    add_common(*r, o, "runs/eval");
    add_schema(*r, o);
    r->add("transcripts", o.transcripts, "Transcript JSONL")->required()->check(CLI::ExistingFile);
    r->add("checkpoints", o.checkpoints, "Turns reported in the IG table");
    r->add("format", o.format, "Report format")->check(CLI::IsMember({"json", "table"}));
    r->flag("curve-csv", o.curve_csv, "Also write IG-vs-turn curves as CSV");
  }
  {
    Sub* sc = sub("winrate", "Win rates from pairwise judgments", cmd_winrate);
    Recorder* r = &sc->rec;
    Options& o = sc->opts;
    add_common(*r, o, "runs/winrate");
    r->add("judgments", o.judgments, "Judgments CSV")->required()->check(CLI::ExistingFile);
    r->add("protocol", o.protocol, "win, wt_half, wt_full or all")
        ->check(CLI::IsMember({"win", "wt_half", "wt_full", "all"}));
  }
  {
    Sub* sc = sub("ablation", "Entropy vs slot-count rewards and persona suite, end to end", cmd_ablation);
    Recorder* r = &sc->rec;
    Options& o = sc->opts;
    add_common(*r, o, "runs/ablation");
    add_schema(*r, o);
    r->add("gen-config", o.gen_config, "Corpus sampling weights JSON")->check(CLI::ExistingFile);
    r->add("n", o.n, "Corpus size");
    r->add("alpha", o.alpha, "Prior smoothing");
    r->add("train-dialogues", o.train_dialogues, "Dialogues harvested for preference data");
    r->add("eval-dialogues", o.eval_dialogues, "Evaluation dialogues per policy");
    r->add("budget", o.budget, "Turn budget for the policy comparison");
    r->add("persona-dialogues", o.persona_dialogues, "Dialogues per persona");
    r->add("persona-max-turns", o.persona_max_turns, "Turn cap for the persona suite");
    r->add("k", o.k, "Candidates per group");
    r->add("epsilon", o.epsilon, "Rollout exploration rate");
    r->add("epochs", o.epochs, "Training epochs");
    r->add("lr", o.lr, "Learning rate");
    r->add("clip-eps", o.clip_eps, "Ratio clip epsilon");
    r->add("kl-beta", o.kl_beta, "KL penalty weight");
    r->add("batch-size", o.batch_size, "Groups per step (0 = full batch)");
    add_gateway(*r, o);
  }
  Options replay_opts;
  Options& o = replay_opts;
  CLI::App* replay = app.add_subcommand("replay", "Re-run a command from its run.json");
  replay->add_option("run", o.run_file, "run.json to replay")->required()->check(CLI::ExistingFile);
  replay->add_option("--out-dir", o.out_dir, "Write outputs here instead of the recorded directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  set_warning_sink([&err](const std::string& m) { err << "warning: " << m << "\n"; });
  struct Restore {
    ~Restore() { set_warning_sink(nullptr); }
  } restore;

  try {
    if (replay->parsed()) return run_replay(replay_opts, out, err);
    for (auto& s : subs) {
      if (!s.rec.app()->parsed()) continue;
      Options& so = s.opts;
      if (so.oracle == "novice" && so.reveal_fraction == 0.0) {
        throw ValidationError("--oracle novice --reveal-fraction 0 never reveals anything and cannot terminate");
      }
      Command cmd(so, out, err);
      fs::create_directories(so.out_dir);
      s.handler(cmd);
      cmd.write_run_json(s.rec.app()->get_name(), s.rec.config());
      return kExitOk;
    }
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ContradictionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const EnumerationLimitError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace inquiry
