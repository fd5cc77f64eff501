// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "inquiry/belief.hpp"
#include "inquiry/schema.hpp"

namespace test {

inline std::string data_path(const std::string& rel) { return std::string(INQUIRY_DATA_DIR) + "/" + rel; }

inline inquiry::SchemaPtr demo_schema() { return inquiry::load_schema(data_path("demo_schema.json")); }
inline inquiry::SchemaPtr binary_schema() { return inquiry::load_schema(data_path("fixtures/schema5.json")); }

/// Schema with the given domain sizes; attribute i is "a<i>" with values "v0", "v1", ...
inline inquiry::SchemaPtr sized_schema(const std::vector<std::size_t>& sizes) {
  std::vector<inquiry::Attribute> attrs;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    inquiry::Attribute a;
    a.id = "a" + std::to_string(i);
    a.label = "attribute " + std::to_string(i);
    for (std::size_t v = 0; v < sizes[i]; ++v) a.domain.push_back("v" + std::to_string(v));
    attrs.push_back(a);
  }
  return std::make_shared<const inquiry::Schema>("sized", "1", attrs);
}

inline inquiry::WorldModel uniform_model(const inquiry::SchemaPtr& schema) {
  std::vector<Eigen::VectorXd> tables;
  for (const auto& a : schema->attributes()) {
    tables.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(a.size()), 1.0 / a.size()));
  }
  return inquiry::make_world_model(schema, tables);
}

/// Strictly positive random distributions over every attribute.
inline inquiry::WorldModel random_model(const inquiry::SchemaPtr& schema, inquiry::Rng& rng) {
  std::vector<Eigen::VectorXd> tables;
  for (const auto& a : schema->attributes()) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(a.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = 0.05 + inquiry::uniform01(rng);
    tables.push_back(p / p.sum());
  }
  return inquiry::make_world_model(schema, tables);
}

/// A fresh scratch directory under the working directory.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace test
