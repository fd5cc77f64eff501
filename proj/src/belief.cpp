// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include "inquiry/belief.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace inquiry {

using json = nlohmann::ordered_json;

std::string to_string(EvidenceProvenance p) {
  switch (p) {
    case EvidenceProvenance::kOracle: return "oracle";
    case EvidenceProvenance::kHuman: return "human";
    case EvidenceProvenance::kParser: return "parser";
  }
  return "oracle";
}

EvidenceProvenance evidence_provenance_from_string(const std::string& text) {
  if (text == "oracle") return EvidenceProvenance::kOracle;
  if (text == "human") return EvidenceProvenance::kHuman;
  if (text == "parser") return EvidenceProvenance::kParser;
  throw ValidationError("unknown evidence provenance '" + text + "'");
}

bool Evidence::has_non_singleton() const {
  return std::any_of(constraints.begin(), constraints.end(),
                     [](const auto& kv) { return kv.second.size() != 1; });
}

void validate_evidence(const Schema& schema, const Evidence& evidence) {
  for (const auto& [id, subset] : evidence.constraints) {
    const auto& a = schema.attribute(schema.require_index(id));
    if (subset.empty()) throw ValidationError("evidence for '" + id + "' has an empty subset");
    std::set<std::string> seen;
    for (const auto& v : subset) {
      if (!a.value_index(v)) {
        throw ValidationError("evidence value '" + v + "' is not in the domain of '" + id + "'");
      }
      if (!seen.insert(v).second) {
        throw ValidationError("evidence for '" + id + "' repeats value '" + v + "'");
      }
    }
  }
}

// -- BeliefState -----------------------------------------------------------------

BeliefState::BeliefState(SchemaPtr schema, std::vector<Eigen::VectorXd> distributions,
                         std::size_t turn)
    : schema_(std::move(schema)), dists_(std::move(distributions)), turn_(turn) {
  if (!schema_) throw ValidationError("belief: null schema");
  if (dists_.size() != schema_->size()) throw ValidationError("belief: arity mismatch");
  resolved_.assign(dists_.size(), false);
  for (std::size_t i = 0; i < dists_.size(); ++i) {
    const auto& a = schema_->attribute(i);
    auto& p = dists_[i];
    if (static_cast<std::size_t>(p.size()) != a.size()) {
      throw ValidationError("belief: distribution for '" + a.id + "' has the wrong size");
    }
    if (!p.allFinite() || (p.array() < 0.0).any()) {
      throw ValidationError("belief: distribution for '" + a.id + "' has invalid entries");
    }
    if (std::abs(p.sum() - 1.0) > 1e-9) {
      throw ValidationError("belief: distribution for '" + a.id + "' does not sum to 1");
    }
    refresh(i);
  }
}

void BeliefState::refresh(std::size_t i) {
  auto& p = dists_[i];
  Eigen::Index top = 0;
  p.maxCoeff(&top);
  if (1.0 - p(top) < kProbabilityFloor) {
    p.setZero();
    p(top) = 1.0;
    resolved_[i] = true;
  } else {
    resolved_[i] = false;
  }
}

std::vector<std::string> BeliefState::resolved_ids() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < dists_.size(); ++i) {
    if (resolved_[i]) out.push_back(schema_->attribute(i).id);
  }
  return out;
}

std::size_t BeliefState::resolved_count() const {
  return static_cast<std::size_t>(std::count(resolved_.begin(), resolved_.end(), true));
}

std::size_t BeliefState::mode(std::size_t i) const {
  const auto& p = dists_.at(i);
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < p.size(); ++j) {
    if (p(j) > p(best)) best = j;
  }
  return static_cast<std::size_t>(best);
}

BeliefState init_belief(const WorldModel& model) {
  model.validate();
  return BeliefState(model.schema, model.tables, 0);
}

double total_entropy(const BeliefState& belief) {
  double h = 0.0;
  for (const auto& p : belief.distributions()) h += entropy_bits(p);
  return h;
}

// -- updates ---------------------------------------------------------------------

RewardRecord apply_evidence_inplace(BeliefState& belief, const Evidence& evidence,
                                    ContradictionPolicy policy) {
  const Schema& schema = belief.schema();
  validate_evidence(schema, evidence);

  RewardRecord record;
  record.slots = evidence.constraints.size();
  record.non_singleton = evidence.has_non_singleton();
  const double before_total = total_entropy(belief);

  // Check every constraint before mutating so strict failures leave the
  // belief untouched.
  struct Planned {
    std::size_t attr;
    Eigen::VectorXd mask;
    bool contradiction;
  };
  std::vector<Planned> plan;
  for (const auto& [id, subset] : evidence.constraints) {
    const std::size_t i = schema.require_index(id);
    const auto& a = schema.attribute(i);
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.size()));
    for (const auto& v : subset) mask(static_cast<Eigen::Index>(*a.value_index(v))) = 1.0;
    const double mass = belief.dists_[i].cwiseProduct(mask).sum();
    const bool contradiction = mass <= kProbabilityFloor;
    if (contradiction && policy == ContradictionPolicy::kStrict) {
      throw ContradictionError("evidence for '" + id + "' excludes every value the belief supports");
    }
    plan.push_back({i, std::move(mask), contradiction});
  }

  for (auto& step : plan) {
    const auto& a = schema.attribute(step.attr);
    auto& p = belief.dists_[step.attr];
    const bool was_resolved = belief.resolved_[step.attr];
    const double before = entropy_bits(p);
    if (step.contradiction) {
      p = step.mask / step.mask.sum();
      record.contradictions.push_back(a.id);
      warn("contradictory evidence for '" + a.id + "' replaced the previous belief");
    } else {
      Eigen::VectorXd posterior = p.cwiseProduct(step.mask);
      p = posterior / posterior.sum();
    }
    belief.refresh(step.attr);
    const double drop = before - entropy_bits(p);
    record.drops[a.id] = drop;
    record.constrained_sum_bits += drop;
    if (!was_resolved && belief.resolved_[step.attr]) record.resolved_attributes.push_back(a.id);
  }

  const double after_total = total_entropy(belief);
  record.ig_bits = before_total - after_total;
  if (std::abs(record.ig_bits - record.constrained_sum_bits) > 1e-9) {
    throw std::logic_error("entropy-difference and per-attribute rewards disagree");
  }
  ++belief.turn_;
  record.turn = belief.turn_;
  return record;
}

std::pair<BeliefState, RewardRecord> apply_evidence(const BeliefState& belief,
                                                    const Evidence& evidence,
                                                    ContradictionPolicy policy) {
  BeliefState next = belief;
  RewardRecord record = apply_evidence_inplace(next, evidence, policy);
  return {std::move(next), std::move(record)};
}

// -- answer models -----------------------------------------------------------------

std::size_t effective_coarseness(std::size_t coarseness, std::size_t domain_size) {
  if (domain_size < 2) return 1;
  return std::clamp<std::size_t>(coarseness, 1, domain_size - 1);
}

AnswerModel AnswerModel::full_reveal() {
  return {[](std::size_t, std::size_t truth) {
    return std::vector<AnswerOutcome>{{1.0, {truth}}};
  }};
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Calls fn(subset) for every k-subset of `pool`, in lexicographic order.
template <typename Fn>
void for_each_combination(const std::vector<std::size_t>& pool, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  if (k > pool.size()) return;
  while (true) {
    std::vector<std::size_t> subset(k);
    for (std::size_t i = 0; i < k; ++i) subset[i] = pool[idx[i]];
    fn(subset);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == pool.size() - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

AnswerModel AnswerModel::partial_reveal(double reveal_fraction, std::size_t coarseness) {
  if (!(reveal_fraction >= 0.0 && reveal_fraction <= 1.0)) {
    throw ValidationError("reveal fraction must lie in [0, 1]");
  }
  return {[reveal_fraction, coarseness](std::size_t n, std::size_t truth) {
    std::vector<AnswerOutcome> out;
    if (reveal_fraction < 1.0) out.push_back({1.0 - reveal_fraction, {}});
    if (reveal_fraction > 0.0) {
      const std::size_t c = effective_coarseness(coarseness, n);
      std::vector<std::size_t> others;
      for (std::size_t v = 0; v < n; ++v) {
        if (v != truth) others.push_back(v);
      }
      const double each = reveal_fraction / binomial(n - 1, c - 1);
      for_each_combination(others, c - 1, [&](std::vector<std::size_t> subset) {
        subset.push_back(truth);
        std::sort(subset.begin(), subset.end());
        out.push_back({each, std::move(subset)});
      });
    }
    return out;
  }};
}

double expected_information_gain(const BeliefState& belief, const std::vector<std::string>& targeted,
                                 const AnswerModel& answers, std::size_t max_joint_outcomes) {
  std::vector<std::size_t> attrs;
  for (const auto& id : targeted) {
    const std::size_t i = belief.schema().require_index(id);
    if (std::find(attrs.begin(), attrs.end(), i) == attrs.end()) attrs.push_back(i);
  }

  // Per attribute: distinct answers with marginal probability and the KL of
  // the Bayes posterior from the current marginal.
  struct Distinct {
    double probability;
    double kl;
  };
  std::vector<std::vector<Distinct>> per_attr;
  double joint = 1.0;
  for (std::size_t i : attrs) {
    const Eigen::VectorXd& prior = belief.distribution(i);
    const std::size_t n = static_cast<std::size_t>(prior.size());
    std::map<std::vector<std::size_t>, Eigen::VectorXd> unnormalized;
    std::size_t pairs = 0;
    for (std::size_t v = 0; v < n; ++v) {
      const auto outs = answers.outcomes(n, v);
      pairs += outs.size();
      if (prior(static_cast<Eigen::Index>(v)) <= 0.0) continue;
      for (const auto& o : outs) {
        auto [it, _] = unnormalized.try_emplace(o.subset, Eigen::VectorXd::Zero(prior.size()));
        it->second(static_cast<Eigen::Index>(v)) += prior(static_cast<Eigen::Index>(v)) * o.probability;
      }
    }
    joint *= static_cast<double>(pairs);
    if (joint > static_cast<double>(max_joint_outcomes)) {
      throw EnumerationLimitError("expected_information_gain: more than " +
                                  std::to_string(max_joint_outcomes) + " joint outcomes");
    }
    std::vector<Distinct> distinct;
    for (const auto& [subset, weights] : unnormalized) {
      const double marginal = weights.sum();
      if (marginal <= 0.0) continue;
      distinct.push_back({marginal, kl_divergence_bits(weights / marginal, prior)});
    }
    per_attr.push_back(std::move(distinct));
  }

  // Joint answers are tuples of per-attribute answers; walk them all.
  double expected = 0.0;
  std::vector<std::size_t> odometer(per_attr.size(), 0);
  while (true) {
    double p = 1.0;
    double kl = 0.0;
    for (std::size_t k = 0; k < per_attr.size(); ++k) {
      p *= per_attr[k][odometer[k]].probability;
      kl += per_attr[k][odometer[k]].kl;
    }
    expected += p * kl;
    std::size_t k = 0;
    while (k < odometer.size() && ++odometer[k] == per_attr[k].size()) odometer[k++] = 0;
    if (k == odometer.size()) break;
  }
  return expected;
}

// -- JSON ----------------------------------------------------------------------------

std::string serialize_belief(const BeliefState& belief) {
  json j;
  j["t"] = belief.turn();
  json dists = json::object();
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const auto& a = belief.schema().attribute(i);
    json d = json::object();
    for (std::size_t v = 0; v < a.size(); ++v) {
      d[a.domain[v]] = round_significant(belief.distribution(i)(static_cast<Eigen::Index>(v)), 12);
    }
    dists[a.id] = std::move(d);
  }
  j["distributions"] = std::move(dists);
  j["resolved"] = belief.resolved_ids();
  return j.dump();
}

BeliefState parse_belief(SchemaPtr schema, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("belief snapshot: ") + e.what());
  }
  if (!j.contains("distributions")) throw ValidationError("belief snapshot: missing 'distributions'");
  std::vector<Eigen::VectorXd> dists;
  for (const auto& a : schema->attributes()) {
    if (!j["distributions"].contains(a.id)) {
      throw ValidationError("belief snapshot: missing attribute '" + a.id + "'");
    }
    const auto& d = j["distributions"][a.id];
    Eigen::VectorXd p(static_cast<Eigen::Index>(a.size()));
    for (std::size_t v = 0; v < a.size(); ++v) {
      p(static_cast<Eigen::Index>(v)) = d.at(a.domain[v]).get<double>();
    }
    const double s = p.sum();
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError("belief snapshot: '" + a.id + "' does not sum to 1");
    dists.push_back(p);
  }
  return BeliefState(std::move(schema), std::move(dists), j.value("t", std::size_t{0}));
}

std::string serialize_evidence(const Evidence& evidence) {
  json j = json::object();
  for (const auto& [id, subset] : evidence.constraints) j[id] = subset;
  return j.dump();
}

}  // namespace inquiry
