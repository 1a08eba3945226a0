#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cvtail/dist_core.hpp"

namespace cvtail {

/// Which summand indices k (1-based) a marginal rule entry applies to.
struct Selector
{
  enum class Kind
  {
    odd,
    even,
    index,
    fallback
  };
  Kind kind = Kind::fallback;
  std::size_t index = 0; // used when kind == index

  static Selector odd() { return {Kind::odd, 0}; }
  static Selector even() { return {Kind::even, 0}; }
  static Selector at(std::size_t k) { return {Kind::index, k}; }
  static Selector fallback() { return {Kind::fallback, 0}; }

  bool matches(std::size_t k) const;
  std::string to_string() const;
};

struct RuleEntry
{
  Selector selector;
  MarginalLaw law;
};

/// Heterogeneous summand sequence plus an independent counting law.
///
/// The rule is an ordered list; the first entry whose selector matches k
/// defines xi_k. Every rule is eventually periodic with period 1 or 2
/// beyond the largest index selector.
class ModelSpec
{
 public:
  /// Throws ConfigError if the rule is not total or the counting law is
  /// degenerate at zero.
  ModelSpec(std::vector<RuleEntry> rule, CountingLaw counting);

  static ModelSpec iid(MarginalLaw law, CountingLaw counting);

  std::vector<RuleEntry> const& rule() const { return rule_; }
  CountingLaw const& counting() const { return counting_; }

  /// Law of xi_k, k >= 1.
  MarginalLaw const& marginal(std::size_t k) const { return rule_[entry_index(k)].law; }
  std::size_t entry_index(std::size_t k) const;

  /// Largest index selector (0 if none); beyond it the rule is periodic.
  std::size_t head_length() const { return head_; }
  std::size_t period() const { return period_; }

  /// Rule entries reachable from some k >= k_min, in rule order.
  std::vector<std::size_t> reachable_entries(std::size_t k_min) const;

  /// counts[e] = #{k <= n : entry_index(k) == e}.
  std::vector<std::size_t> law_counts(std::size_t n) const;

  bool is_iid() const { return reachable_entries(1).size() == 1; }
  /// Smallest support point over every reachable marginal.
  double support_min() const;

  std::string canonical() const;
  /// FNV-1a of canonical().
  std::uint64_t hash() const;

 private:
  std::vector<RuleEntry> rule_;
  CountingLaw counting_;
  std::size_t head_ = 0;
  std::size_t period_ = 1;
};

/// Worked example models. Example 1: lifted geometric on odd k,
/// Exponential(1) on even k, Poisson counts. Example 2: Pareto(2,1) on odd k,
/// Exponential(1) on even k, Zeta(4) counts.
ModelSpec example1_model(double q = 0.5, double lambda = 1.0);
ModelSpec example2_model();
/// Compound geometric-exponential model with the closed-form tail q e^{-(1-q)x}.
ModelSpec geometric_exponential_model(double q = 0.5);

std::uint64_t fnv1a(std::string const& bytes);

} // namespace cvtail
