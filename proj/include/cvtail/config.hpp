#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvtail/model.hpp"

namespace cvtail {

/// Optional command parameters; a [run] table in the model document sets
/// them, command-line flags override them.
struct RunParams
{
  std::optional<std::string> theorem; // "1", "2", "3", "C1", "C2"
  std::optional<std::size_t> d_claim;
  std::optional<bool> conclusion;

  std::optional<double> x_max;
  std::optional<double> step;
  std::optional<double> growth;
  std::optional<double> eps_trunc;
  std::optional<std::string> method; // "auto", "direct", "fft"
  std::optional<std::size_t> n;      // n-fold tail instead of the compound tail

  std::optional<std::size_t> k; // summand index for ratio curves
  std::optional<std::vector<double>> y;
  std::optional<double> x_lo;
  std::optional<double> x_hi;
  std::optional<double> x_growth;

  std::optional<std::vector<double>> x;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<bool> stratified;

  std::optional<double> tau_c;
  std::optional<double> tau_o;

  std::optional<std::string> out_dir;

  /// Fields set in other take precedence.
  void merge(RunParams const& other);
};

/// Throws ConfigError naming the first out-of-range parameter.
void validate(RunParams const& params);

struct RunConfig
{
  ModelSpec model;
  RunParams run;
};

/// Model document:
///
///   [counting]
///   law = "zeta4"            # poisson (lambda), geometric (q), finite (pmf), point_mass (n)
///
///   [[marginal]]
///   select = "odd"           # odd, even, default, or a summand index
///   law = "pareto"           # pareto (alpha, scale), exponential (rate),
///   alpha = 2.0              # lifted_geometric (q), degenerate (point),
///                            # lattice (points, tails)
///   [run]                    # optional RunParams
///
/// Unknown keys and malformed values raise ConfigError.
RunConfig parse_config(std::string_view text, std::string const& origin = "<string>");
RunConfig load_config(std::string const& path);

} // namespace cvtail
