// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "inquiry/common.hpp"

namespace inquiry {

enum class AttributeGroup { kLayout, kColor, kComponents, kConnections, kOther };

std::string to_string(AttributeGroup group);
AttributeGroup attribute_group_from_string(const std::string& text);

struct Attribute {
  std::string id;
  std::string label;
  AttributeGroup group = AttributeGroup::kOther;
  std::vector<std::string> domain;

  std::size_t size() const { return domain.size(); }
  std::optional<std::size_t> value_index(const std::string& value) const;
};

/// The specification space: an ordered list of finite-domain attributes.
/// Immutable once validated; share it through SchemaPtr.
class Schema {
 public:
  Schema() = default;
  /// Throws ValidationError naming the offending attribute.
  Schema(std::string name, std::string version, std::vector<Attribute> attributes);

  const std::string& name() const { return name_; }
  const std::string& version() const { return version_; }
  std::string ref() const { return name_ + "@" + version_; }

  std::size_t size() const { return attributes_.size(); }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  const Attribute& attribute(std::size_t i) const { return attributes_.at(i); }

  std::optional<std::size_t> index_of(const std::string& id) const;
  /// Like index_of but throws ValidationError for unknown ids.
  std::size_t require_index(const std::string& id) const;

  /// log2 of the number of complete specifications.
  double log2_space_size() const;

 private:
  std::string name_;
  std::string version_;
  std::vector<Attribute> attributes_;
  std::unordered_map<std::string, std::size_t> index_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

/// One complete point of the specification space.
struct Specification {
  std::string id;
  std::map<std::string, std::string> assignment;
};

/// Value indices in schema order. Throws ValidationError unless the
/// specification assigns exactly one in-domain value to every attribute.
std::vector<std::size_t> value_indices(const Schema& schema, const Specification& spec);
void validate_specification(const Schema& schema, const Specification& spec);
Specification make_specification(const Schema& schema, const std::vector<std::size_t>& values,
                                 std::string id = {});

/// Per-attribute sampling weights used by the synthetic corpus generator.
struct GenConfig {
  std::vector<std::vector<double>> weights;  // schema order

  static GenConfig uniform(const Schema& schema);
};

/// Empirical prior P0(V_i = v) for every attribute, in schema order.
struct WorldModel {
  SchemaPtr schema;
  double alpha = 0.0;
  std::size_t corpus_size = 0;
  std::vector<Eigen::VectorXd> tables;

  void validate() const;
};

// -- construction ----------------------------------------------------------

SchemaPtr load_schema(const std::string& path);
SchemaPtr parse_schema(const std::string& json_text);
std::string serialize_schema(const Schema& schema);

GenConfig parse_gen_config(const Schema& schema, const std::string& json_text);
GenConfig load_gen_config(const Schema& schema, const std::string& path);

/// `n` specifications sampled independently per attribute. Deterministic
/// for a fixed seed.
std::vector<Specification> generate_corpus(const Schema& schema, const GenConfig& config,
                                           std::size_t n, std::uint64_t seed);

/// P0(v) = (count(v) + alpha) / (|corpus| + alpha * |domain|).
/// alpha = 0 is the plain maximum-likelihood estimate.
WorldModel estimate_prior(SchemaPtr schema, const std::vector<Specification>& corpus,
                          double smoothing_alpha);

/// World model whose tables are given directly (tests, probes).
WorldModel make_world_model(SchemaPtr schema, std::vector<Eigen::VectorXd> tables);

// -- file formats ----------------------------------------------------------

std::string serialize_specification(const Schema& schema, const Specification& spec);
Specification parse_specification(const Schema& schema, const std::string& json_line,
                                  std::string id);
std::string serialize_corpus(const Schema& schema, const std::vector<Specification>& corpus);
std::vector<Specification> parse_corpus(const Schema& schema, const std::string& jsonl);
std::vector<Specification> load_corpus(const Schema& schema, const std::string& path);

std::string serialize_world_model(const WorldModel& model);
WorldModel parse_world_model(SchemaPtr schema, const std::string& json_text);
WorldModel load_world_model(SchemaPtr schema, const std::string& path);

}  // namespace inquiry
