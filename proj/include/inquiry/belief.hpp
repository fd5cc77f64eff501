// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "inquiry/schema.hpp"

namespace inquiry {

/// Probabilities below this are treated as exact zeros by the entropy code.
inline constexpr double kProbabilityFloor = 1e-12;

/// Shannon entropy in bits of a probability vector. 0 log 0 := 0, and
/// entries under kProbabilityFloor count as zero.
template <typename Derived>
typename Derived::Scalar entropy_bits(const Eigen::DenseBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  using std::log2;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar x = p.derived().coeff(i);
    if (x > Scalar(kProbabilityFloor)) h -= x * log2(x);
  }
  return h;
}

/// D_KL(p || q) in bits. Requires q > 0 wherever p > 0.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence_bits(const Eigen::DenseBase<DerivedP>& p,
                                             const Eigen::DenseBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  using std::log2;
  Scalar d(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar x = p.derived().coeff(i);
    if (x > Scalar(kProbabilityFloor)) d += x * log2(x / q.derived().coeff(i));
  }
  return d;
}

enum class EvidenceProvenance { kOracle, kHuman, kParser };

std::string to_string(EvidenceProvenance p);
EvidenceProvenance evidence_provenance_from_string(const std::string& text);

/// Hard constraints extracted from one answer: each constrained attribute is
/// restricted to a nonempty subset of its domain. Singletons pin the value.
struct Evidence {
  std::map<std::string, std::vector<std::string>> constraints;
  EvidenceProvenance provenance = EvidenceProvenance::kOracle;

  bool empty() const { return constraints.empty(); }
  bool has_non_singleton() const;
  bool operator==(const Evidence& other) const { return constraints == other.constraints; }
};

/// Throws ValidationError for unknown ids, unknown values, or empty subsets.
void validate_evidence(const Schema& schema, const Evidence& evidence);

struct RewardRecord;
enum class ContradictionPolicy { kStrict, kLenient };
class BeliefState;
RewardRecord apply_evidence_inplace(BeliefState& belief, const Evidence& evidence,
                                    ContradictionPolicy policy);

/// Factorized belief over the specification space: one distribution per
/// attribute, in schema order.
class BeliefState {
 public:
  BeliefState() = default;
  BeliefState(SchemaPtr schema, std::vector<Eigen::VectorXd> distributions, std::size_t turn = 0);

  const SchemaPtr& schema_ptr() const { return schema_; }
  const Schema& schema() const { return *schema_; }
  std::size_t size() const { return dists_.size(); }
  std::size_t turn() const { return turn_; }

  const Eigen::VectorXd& distribution(std::size_t i) const { return dists_.at(i); }
  const std::vector<Eigen::VectorXd>& distributions() const { return dists_; }
  bool resolved(std::size_t i) const { return resolved_.at(i); }
  std::vector<std::string> resolved_ids() const;
  std::size_t resolved_count() const;

  double marginal_entropy(std::size_t i) const { return entropy_bits(dists_.at(i)); }
  /// Index of the most probable value (lowest index on ties).
  std::size_t mode(std::size_t i) const;

 private:
  friend RewardRecord apply_evidence_inplace(BeliefState&, const Evidence&, ContradictionPolicy);
  void refresh(std::size_t i);

  SchemaPtr schema_;
  std::vector<Eigen::VectorXd> dists_;
  std::vector<bool> resolved_;
  std::size_t turn_ = 0;
};

struct RewardRecord {
  std::size_t turn = 0;
  double ig_bits = 0.0;                        // total-entropy difference
  double constrained_sum_bits = 0.0;           // sum of per-attribute drops
  std::vector<std::string> resolved_attributes;  // newly resolved this turn
  std::map<std::string, double> drops;         // constrained attribute -> bits
  std::size_t slots = 0;                       // attributes constrained
  bool non_singleton = false;
  std::vector<std::string> contradictions;     // lenient mode only
};

BeliefState init_belief(const WorldModel& model);

/// Sum of marginal entropies, in bits.
double total_entropy(const BeliefState& belief);

/// Conditions the belief on the evidence. Each constrained attribute is
/// restricted to its subset and renormalized; others are untouched. The
/// reward is computed both as the total-entropy difference and as the sum
/// of per-attribute drops, and the two must agree within 1e-9.
std::pair<BeliefState, RewardRecord> apply_evidence(
    const BeliefState& belief, const Evidence& evidence,
    ContradictionPolicy policy = ContradictionPolicy::kStrict);

/// In-place form used by the dialogue loop.
inline RewardRecord apply_evidence_inplace(BeliefState& belief, const Evidence& evidence) {
  return apply_evidence_inplace(belief, evidence, ContradictionPolicy::kStrict);
}

/// One possible answer about a single attribute: the revealed subset (empty
/// when the attribute is left unanswered) and its probability given the truth.
struct AnswerOutcome {
  double probability = 0.0;
  std::vector<std::size_t> subset;
};

/// Finite answer distribution per attribute, given the attribute's domain
/// size and its true value.
struct AnswerModel {
  std::function<std::vector<AnswerOutcome>(std::size_t domain_size, std::size_t true_value)> outcomes;

  /// Reveals the exact value every time.
  static AnswerModel full_reveal();
  /// With probability `reveal_fraction` reveals a uniformly chosen subset of
  /// effective_coarseness(...) values containing the truth; otherwise nothing.
  static AnswerModel partial_reveal(double reveal_fraction, std::size_t coarseness);
};

/// Subset size actually used for a domain: at most |domain| - 1, so every
/// reveal is informative.
std::size_t effective_coarseness(std::size_t coarseness, std::size_t domain_size);

/// Expected KL divergence of posterior from prior over all joint answers to
/// a question about `targeted`, by exhaustive enumeration.
double expected_information_gain(const BeliefState& belief, const std::vector<std::string>& targeted,
                                 const AnswerModel& answers,
                                 std::size_t max_joint_outcomes = 1'000'000);

// JSON snapshot: {"t", "distributions":{id:{value:prob}}, "resolved":[ids]}
std::string serialize_belief(const BeliefState& belief);
BeliefState parse_belief(SchemaPtr schema, const std::string& json_text);

std::string serialize_evidence(const Evidence& evidence);

}  // namespace inquiry
