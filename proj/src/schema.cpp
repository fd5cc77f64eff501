// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/schema.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

namespace inquiry {

using json = nlohmann::ordered_json;

std::string to_string(AttributeGroup group) {
  switch (group) {
    case AttributeGroup::kLayout: return "layout";
    case AttributeGroup::kColor: return "color";
    case AttributeGroup::kComponents: return "components";
    case AttributeGroup::kConnections: return "connections";
    case AttributeGroup::kOther: return "other";
  }
  return "other";
}

AttributeGroup attribute_group_from_string(const std::string& text) {
  if (text == "layout") return AttributeGroup::kLayout;
  if (text == "color") return AttributeGroup::kColor;
  if (text == "components") return AttributeGroup::kComponents;
  if (text == "connections") return AttributeGroup::kConnections;
  if (text == "other") return AttributeGroup::kOther;
  throw ValidationError("unknown attribute group '" + text + "'");
}

std::optional<std::size_t> Attribute::value_index(const std::string& value) const {
  for (std::size_t j = 0; j < domain.size(); ++j) {
    if (domain[j] == value) return j;
  }
  return std::nullopt;
}

Schema::Schema(std::string name, std::string version, std::vector<Attribute> attributes)
    : name_(std::move(name)), version_(std::move(version)), attributes_(std::move(attributes)) {
  if (attributes_.empty()) throw ValidationError("schema '" + name_ + "' has no attributes");
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    const Attribute& a = attributes_[i];
    if (a.id.empty()) {
      throw ValidationError("attribute #" + std::to_string(i) + " has an empty id");
    }
    if (!index_.emplace(a.id, i).second) {
      throw ValidationError("duplicate attribute id '" + a.id + "'");
    }
    std::set<std::string> seen(a.domain.begin(), a.domain.end());
    if (seen.size() != a.domain.size()) {
      throw ValidationError("attribute '" + a.id + "' has duplicate domain values");
    }
    if (a.domain.size() < 2) {
      throw ValidationError("attribute '" + a.id + "' needs at least 2 domain values");
    }
    for (const auto& v : a.domain) {
      if (v.empty()) throw ValidationError("attribute '" + a.id + "' has an empty value");
    }
  }
}

std::optional<std::size_t> Schema::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Schema::require_index(const std::string& id) const {
  auto idx = index_of(id);
  if (!idx) throw ValidationError("unknown attribute id '" + id + "'");
  return *idx;
}

double Schema::log2_space_size() const {
  double bits = 0.0;
  for (const auto& a : attributes_) bits += std::log2(static_cast<double>(a.size()));
  return bits;
}

std::vector<std::size_t> value_indices(const Schema& schema, const Specification& spec) {
  std::vector<std::size_t> out(schema.size());
  if (spec.assignment.size() != schema.size()) {
    for (const auto& [id, _] : spec.assignment) schema.require_index(id);
    for (const auto& a : schema.attributes()) {
      if (!spec.assignment.count(a.id)) {
        throw ValidationError("specification '" + spec.id + "' is missing attribute '" + a.id + "'");
      }
    }
  }
  for (const auto& [id, value] : spec.assignment) {
    const std::size_t i = schema.require_index(id);
    auto j = schema.attribute(i).value_index(value);
    if (!j) {
      throw ValidationError("specification '" + spec.id + "': value '" + value +
                            "' is not in the domain of '" + id + "'");
    }
    out[i] = *j;
  }
  return out;
}

void validate_specification(const Schema& schema, const Specification& spec) {
  (void)value_indices(schema, spec);
}

Specification make_specification(const Schema& schema, const std::vector<std::size_t>& values,
                                 std::string id) {
  if (values.size() != schema.size()) throw ValidationError("make_specification: arity mismatch");
  Specification spec;
  spec.id = std::move(id);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& a = schema.attribute(i);
    if (values[i] >= a.size()) throw ValidationError("make_specification: value out of range");
    spec.assignment.emplace(a.id, a.domain[values[i]]);
  }
  return spec;
}

GenConfig GenConfig::uniform(const Schema& schema) {
  GenConfig cfg;
  for (const auto& a : schema.attributes()) cfg.weights.emplace_back(a.size(), 1.0);
  return cfg;
}

void WorldModel::validate() const {
  if (!schema) throw ValidationError("world model has no schema");
  if (tables.size() != schema->size()) throw ValidationError("world model arity mismatch");
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& a = schema->attribute(i);
    const auto& t = tables[i];
    if (static_cast<std::size_t>(t.size()) != a.size()) {
      throw ValidationError("world model table for '" + a.id + "' has the wrong size");
    }
    if (!t.allFinite() || (t.array() < 0.0).any()) {
      throw ValidationError("world model table for '" + a.id + "' has invalid entries");
    }
    if (std::abs(t.sum() - 1.0) > 1e-9) {
      throw ValidationError("world model table for '" + a.id + "' does not sum to 1");
    }
  }
}

// -- schema JSON -------------------------------------------------------------

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + ": bad field '" + key + "': " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

SchemaPtr parse_schema(const std::string& json_text) {
  const json j = parse_json(json_text, "schema");
  std::vector<Attribute> attrs;
  if (!j.contains("attributes") || !j["attributes"].is_array()) {
    throw ValidationError("schema: 'attributes' must be an array");
  }
  for (const auto& ja : j["attributes"]) {
    Attribute a;
    a.id = field<std::string>(ja, "id", "schema attribute");
    const std::string where = "attribute '" + a.id + "'";
    a.label = ja.contains("label") ? field<std::string>(ja, "label", where) : a.id;
    a.group = attribute_group_from_string(
        ja.contains("group") ? field<std::string>(ja, "group", where) : "other");
    a.domain = field<std::vector<std::string>>(ja, "domain", where);
    attrs.push_back(std::move(a));
  }
  return std::make_shared<const Schema>(field<std::string>(j, "name", "schema"),
                                        field<std::string>(j, "version", "schema"),
                                        std::move(attrs));
}

SchemaPtr load_schema(const std::string& path) { return parse_schema(read_text_file(path)); }

std::string serialize_schema(const Schema& schema) {
  json j;
  j["name"] = schema.name();
  j["version"] = schema.version();
  j["attributes"] = json::array();
  for (const auto& a : schema.attributes()) {
    j["attributes"].push_back(
        {{"id", a.id}, {"label", a.label}, {"group", to_string(a.group)}, {"domain", a.domain}});
  }
  return dump(j);
}

GenConfig parse_gen_config(const Schema& schema, const std::string& json_text) {
  const json j = parse_json(json_text, "gen config");
  GenConfig cfg = GenConfig::uniform(schema);
  const json& weights = j.contains("weights") ? j["weights"] : j;
  for (auto it = weights.begin(); it != weights.end(); ++it) {
    const std::size_t i = schema.require_index(it.key());
    const auto& a = schema.attribute(i);
    std::vector<double> w;
    if (it.value().is_array()) {
      w = it.value().get<std::vector<double>>();
    } else if (it.value().is_object()) {
      w.assign(a.size(), 0.0);
      for (auto v = it.value().begin(); v != it.value().end(); ++v) {
        auto k = a.value_index(v.key());
        if (!k) throw ValidationError("gen config: unknown value '" + v.key() + "' for '" + a.id + "'");
        w[*k] = v.value().get<double>();
      }
    } else {
      throw ValidationError("gen config: weights for '" + a.id + "' must be an array or object");
    }
    if (w.size() != a.size()) {
      throw ValidationError("gen config: weights for '" + a.id + "' have the wrong length");
    }
    cfg.weights[i] = std::move(w);
  }
  return cfg;
}

GenConfig load_gen_config(const Schema& schema, const std::string& path) {
  return parse_gen_config(schema, read_text_file(path));
}

// -- corpus ---------------------------------------------------------------------

std::vector<Specification> generate_corpus(const Schema& schema, const GenConfig& config,
                                           std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("generate_corpus: n must be at least 1");
  if (config.weights.size() != schema.size()) {
    throw ValidationError("generate_corpus: gen config does not match the schema");
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& w = config.weights[i];
    const auto& a = schema.attribute(i);
    if (w.size() != a.size()) throw ValidationError("generate_corpus: weight length for '" + a.id + "'");
    double total = 0.0;
    for (double x : w) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw ValidationError("generate_corpus: negative weight for '" + a.id + "'");
      }
      total += x;
    }
    if (total <= 0.0) throw ValidationError("generate_corpus: all-zero weights for '" + a.id + "'");
  }

  Rng rng(derive_seed(seed, "corpus"));
  std::vector<Specification> corpus;
  corpus.reserve(n);
  std::vector<std::size_t> values(schema.size());
  char id[32];
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
      values[i] = sample_categorical(rng, config.weights[i]);
    }
    std::snprintf(id, sizeof id, "spec-%06zu", s);
    corpus.push_back(make_specification(schema, values, id));
  }
  return corpus;
}

WorldModel estimate_prior(SchemaPtr schema, const std::vector<Specification>& corpus,
                          double smoothing_alpha) {
  if (!schema) throw ValidationError("estimate_prior: null schema");
  if (corpus.empty()) throw ValidationError("estimate_prior: empty corpus");
  if (!(smoothing_alpha >= 0.0) || !std::isfinite(smoothing_alpha)) {
    throw ValidationError("estimate_prior: smoothing alpha must be finite and nonnegative");
  }
  std::vector<Eigen::VectorXd> counts;
  for (const auto& a : schema->attributes()) {
    counts.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.size())));
  }
  for (const auto& spec : corpus) {
    const auto vals = value_indices(*schema, spec);
    for (std::size_t i = 0; i < vals.size(); ++i) counts[i](static_cast<Eigen::Index>(vals[i])) += 1.0;
  }
  WorldModel model;
  model.schema = schema;
  model.alpha = smoothing_alpha;
  model.corpus_size = corpus.size();
  const double n = static_cast<double>(corpus.size());
  for (auto& c : counts) {
    const double denom = n + smoothing_alpha * static_cast<double>(c.size());
    model.tables.push_back((c.array() + smoothing_alpha) / denom);
  }
  return model;
}

WorldModel make_world_model(SchemaPtr schema, std::vector<Eigen::VectorXd> tables) {
  WorldModel model;
  model.schema = std::move(schema);
  model.tables = std::move(tables);
  model.validate();
  return model;
}

std::string serialize_specification(const Schema& schema, const Specification& spec) {
  const auto vals = value_indices(schema, spec);
  json assignment = json::object();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const auto& a = schema.attribute(i);
    assignment[a.id] = a.domain[vals[i]];
  }
  json j;
  j["assignment"] = std::move(assignment);
  return j.dump();
}

Specification parse_specification(const Schema& schema, const std::string& json_line,
                                  std::string id) {
  const json j = parse_json(json_line, "specification");
  Specification spec;
  spec.id = std::move(id);
  const json& assignment = j.contains("assignment") ? j["assignment"] : j;
  if (!assignment.is_object()) throw ValidationError("specification: 'assignment' must be an object");
  for (auto it = assignment.begin(); it != assignment.end(); ++it) {
    if (!it.value().is_string()) {
      throw ValidationError("specification: value of '" + it.key() + "' must be a string");
    }
    spec.assignment[it.key()] = it.value().get<std::string>();
  }
  validate_specification(schema, spec);
  return spec;
}

std::string serialize_corpus(const Schema& schema, const std::vector<Specification>& corpus) {
  std::string out;
  for (const auto& spec : corpus) {
    out += serialize_specification(schema, spec);
    out += '\n';
  }
  return out;
}

std::vector<Specification> parse_corpus(const Schema& schema, const std::string& jsonl) {
  std::vector<Specification> corpus;
  std::istringstream in(jsonl);
  std::string line;
  char id[32];
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::snprintf(id, sizeof id, "spec-%06zu", corpus.size());
    corpus.push_back(parse_specification(schema, line, id));
  }
  return corpus;
}

std::vector<Specification> load_corpus(const Schema& schema, const std::string& path) {
  return parse_corpus(schema, read_text_file(path));
}

std::string serialize_world_model(const WorldModel& model) {
  model.validate();
  json j;
  j["schema_ref"] = model.schema->ref();
  j["alpha"] = model.alpha;
  j["corpus_size"] = model.corpus_size;
  json tables = json::object();
  for (std::size_t i = 0; i < model.tables.size(); ++i) {
    const auto& a = model.schema->attribute(i);
    json t = json::object();
    for (std::size_t v = 0; v < a.size(); ++v) {
      t[a.domain[v]] = round_significant(model.tables[i](static_cast<Eigen::Index>(v)), 12);
    }
    tables[a.id] = std::move(t);
  }
  j["tables"] = std::move(tables);
  return dump(j);
}

WorldModel parse_world_model(SchemaPtr schema, const std::string& json_text) {
  const json j = parse_json(json_text, "world model");
  WorldModel model;
  model.schema = schema;
  const auto ref = field<std::string>(j, "schema_ref", "world model");
  if (ref != schema->ref()) {
    throw ValidationError("world model was built for '" + ref + "', not '" + schema->ref() + "'");
  }
  model.alpha = field<double>(j, "alpha", "world model");
  model.corpus_size = field<std::size_t>(j, "corpus_size", "world model");
  if (!j.contains("tables") || !j["tables"].is_object()) {
    throw ValidationError("world model: 'tables' must be an object");
  }
  for (const auto& a : schema->attributes()) {
    if (!j["tables"].contains(a.id)) throw ValidationError("world model: no table for '" + a.id + "'");
    const json& t = j["tables"][a.id];
    Eigen::VectorXd p(static_cast<Eigen::Index>(a.size()));
    for (std::size_t v = 0; v < a.size(); ++v) {
      if (!t.contains(a.domain[v])) {
        throw ValidationError("world model: table '" + a.id + "' lacks value '" + a.domain[v] + "'");
      }
      p(static_cast<Eigen::Index>(v)) = t[a.domain[v]].get<double>();
    }
    if (t.size() != a.size()) throw ValidationError("world model: table '" + a.id + "' has extra values");
    // 12 significant digits on disk; restore exact normalization.
    const double s = p.sum();
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError("world model: table '" + a.id + "' does not sum to 1");
    model.tables.push_back(p / s);
  }
  model.validate();
  return model;
}

WorldModel load_world_model(SchemaPtr schema, const std::string& path) {
  return parse_world_model(std::move(schema), read_text_file(path));
}

}  // namespace inquiry
