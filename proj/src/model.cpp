#include "cvtail/model.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "cvtail/errors.hpp"

namespace cvtail {

bool Selector::matches(std::size_t k) const
{
  switch (kind) {
    case Kind::odd: return k % 2 == 1;
    case Kind::even: return k % 2 == 0;
    case Kind::index: return k == index;
    case Kind::fallback: return true;
  }
  return false;
}

std::string Selector::to_string() const
{
  switch (kind) {
    case Kind::odd: return "odd";
    case Kind::even: return "even";
    case Kind::index: return "index " + std::to_string(index);
    case Kind::fallback: return "default";
  }
  return "?";
}

namespace {

constexpr std::size_t kUnresolved = std::numeric_limits<std::size_t>::max();

std::size_t resolve(std::vector<RuleEntry> const& rule, std::size_t k)
{
  for (std::size_t e = 0; e < rule.size(); ++e)
    if (rule[e].selector.matches(k))
      return e;
  return kUnresolved;
}

} // namespace

ModelSpec::ModelSpec(std::vector<RuleEntry> rule, CountingLaw counting)
  : rule_(std::move(rule)), counting_(std::move(counting))
{
  if (rule_.empty())
    throw ConfigError("marginal rule is empty");
  for (auto const& entry : rule_) {
    if (entry.selector.kind == Selector::Kind::index) {
      if (entry.selector.index == 0)
        throw ConfigError("index selectors are 1-based");
      head_ = std::max(head_, entry.selector.index);
    }
  }
  if (!(counting_.pmf(0) < 1.0))
    throw ConfigError("counting law is degenerate at zero");

  // Beyond the head only odd/even/default entries can match, so checking
  // two consecutive indices covers every residue class.
  for (std::size_t k = 1; k <= head_ + 2; ++k)
    if (resolve(rule_, k) == kUnresolved)
      throw ConfigError("marginal rule does not cover k = " + std::to_string(k));

  period_ = resolve(rule_, head_ + 1) == resolve(rule_, head_ + 2) ? 1 : 2;
}

ModelSpec ModelSpec::iid(MarginalLaw law, CountingLaw counting)
{
  return ModelSpec({RuleEntry{Selector::fallback(), std::move(law)}}, std::move(counting));
}

std::size_t ModelSpec::entry_index(std::size_t k) const
{
  if (k == 0)
    throw std::invalid_argument("summand indices start at 1");
  if (k > head_)
    k = head_ + 1 + (k - head_ - 1) % period_;
  return resolve(rule_, k);
}

std::vector<std::size_t> ModelSpec::reachable_entries(std::size_t k_min) const
{
  std::vector<bool> seen(rule_.size(), false);
  std::size_t const k_lo = std::max<std::size_t>(k_min, 1);
  std::size_t const k_hi = std::max(k_lo, head_ + 1) + period_;
  for (std::size_t k = k_lo; k <= k_hi; ++k)
    seen[entry_index(k)] = true;
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < seen.size(); ++e)
    if (seen[e])
      out.push_back(e);
  return out;
}

std::vector<std::size_t> ModelSpec::law_counts(std::size_t n) const
{
  std::vector<std::size_t> counts(rule_.size(), 0);
  std::size_t const head_end = std::min(n, head_);
  for (std::size_t k = 1; k <= head_end; ++k)
    ++counts[entry_index(k)];
  for (std::size_t r = 1; r <= period_; ++r) {
    std::size_t const k = head_ + r;
    if (k <= n)
      counts[entry_index(k)] += (n - k) / period_ + 1;
  }
  return counts;
}

double ModelSpec::support_min() const
{
  double lo = std::numeric_limits<double>::infinity();
  for (auto e : reachable_entries(1))
    lo = std::min(lo, rule_[e].law.support_min());
  return lo;
}

std::string ModelSpec::canonical() const
{
  std::ostringstream os;
  os << "rule[";
  for (std::size_t e = 0; e < rule_.size(); ++e)
    os << (e ? ";" : "") << rule_[e].selector.to_string() << ":" << rule_[e].law.describe();
  os << "] counting[" << counting_.describe() << "]";
  return os.str();
}

std::uint64_t fnv1a(std::string const& bytes)
{
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t ModelSpec::hash() const
{
  return fnv1a(canonical());
}

ModelSpec example1_model(double q, double lambda)
{
  return ModelSpec({RuleEntry{Selector::odd(), MarginalLaw::lifted_geometric(q)},
                    RuleEntry{Selector::even(), MarginalLaw::exponential(1.0)}},
                   CountingLaw::poisson(lambda));
}

ModelSpec example2_model()
{
  return ModelSpec({RuleEntry{Selector::odd(), MarginalLaw::pareto(2.0, 1.0)},
                    RuleEntry{Selector::even(), MarginalLaw::exponential(1.0)}},
                   CountingLaw::zeta4());
}

ModelSpec geometric_exponential_model(double q)
{
  return ModelSpec::iid(MarginalLaw::exponential(1.0), CountingLaw::geometric(q));
}

} // namespace cvtail
