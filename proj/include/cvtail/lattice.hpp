#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cvtail/dist_core.hpp"

namespace cvtail {

/// Lattice points 0 = g_0 < g_1 < ... < g_{m-1}, every point an integer
/// multiple of one unit so that sums of points are located exactly.
///
/// A uniform grid has g_i = i * unit. A hybrid grid is uniform up to
/// unit / growth and geometric (relative spacing ~growth) beyond.
class LatticeGrid
{
 public:
  static LatticeGrid uniform(double step, double span);
  static LatticeGrid hybrid(double step, double growth, double span);

  /// Grid used when the caller gives only the largest x of interest.
  static LatticeGrid default_for(double x_max);

  /// Arbitrary strictly increasing unit counts starting at 0.
  static LatticeGrid from_units(double unit, std::vector<std::int64_t> units, std::string label = "custom");

  /// Bisects every cell; the result contains every point of *this.
  LatticeGrid refined() const;

  std::size_t size() const { return data_->units.size(); }
  double unit() const { return data_->unit; }
  std::int64_t units(std::size_t i) const { return data_->units[i]; }
  std::vector<std::int64_t> const& all_units() const { return data_->units; }
  double point(std::size_t i) const { return data_->points[static_cast<Eigen::Index>(i)]; }
  Eigen::ArrayXd const& points() const { return data_->points; }
  double span() const { return point(size() - 1); }
  bool is_uniform() const { return data_->uniform; }

  /// Largest i with g_i <= x, or -1 when x < 0.
  std::ptrdiff_t index_at_or_below(double x) const;

  std::string describe() const;
  std::uint64_t fingerprint() const { return data_->fingerprint; }

  friend bool operator==(LatticeGrid const& a, LatticeGrid const& b)
  {
    return a.data_ == b.data_ || (a.unit() == b.unit() && a.all_units() == b.all_units());
  }

 private:
  struct Data
  {
    double unit = 1.0;
    std::vector<std::int64_t> units;
    Eigen::ArrayXd points;
    bool uniform = true;
    std::string label;
    std::uint64_t fingerprint = 0;
  };
  explicit LatticeGrid(std::shared_ptr<Data const> data) : data_(std::move(data)) {}

  std::shared_ptr<Data const> data_;
};

struct Bracket
{
  double lower = 0.0;
  double upper = 1.0;

  bool contains(double v) const { return lower <= v && v <= upper; }
  double width() const { return upper - lower; }
};

/// Certified enclosure of a tail on a lattice: lower[i] <= P(S > g_i) <= upper[i].
///
/// Upper comes from rounding every summand up to the lattice, lower from
/// rounding down; mass beyond the last point sits in an overflow bin, so
/// upper[m-1] and lower[m-1] are the overflow probabilities.
class LatticeTail
{
 public:
  /// Throws std::invalid_argument if the arrays violate the bracket invariants.
  LatticeTail(LatticeGrid grid, Eigen::ArrayXd lower, Eigen::ArrayXd upper);

  LatticeGrid const& grid() const { return grid_; }
  Eigen::ArrayXd const& lower() const { return lower_; }
  Eigen::ArrayXd const& upper() const { return upper_; }
  std::size_t size() const { return grid_.size(); }
  double origin() const { return 0.0; }
  double step() const { return grid_.unit(); }

  /// Enclosure of P(S > x) for any real x.
  Bracket at(double x) const;
  double upper_at(double x) const { return at(x).upper; }
  double lower_at(double x) const { return at(x).lower; }

  /// Largest upper - lower over the lattice.
  double max_width() const;

 private:
  LatticeGrid grid_;
  Eigen::ArrayXd lower_;
  Eigen::ArrayXd upper_;
};

/// Bracket a nonnegative law on the grid. Throws UnsupportedLaw otherwise.
LatticeTail discretize(MarginalLaw const& law, LatticeGrid const& grid);

/// Point mass at 0, the law of the empty sum.
LatticeTail zero_tail(LatticeGrid const& grid);

enum class ConvolutionMethod
{
  automatic,
  direct,
  fft
};

struct ConvolutionStats
{
  ConvolutionMethod used = ConvolutionMethod::direct;
  double interior_upper = 0.0; // mass landing on lattice points
  double overflow_upper = 0.0;
  double interior_lower = 0.0;
  double overflow_lower = 0.0;
  double fft_error_bound = 0.0; // per-entry pad, fft path only
};

/// Bracket of the sum of two independent lattice laws on the same grid.
/// Automatic picks the padded FFT for large uniform grids and direct
/// summation otherwise. Throws std::invalid_argument on grid mismatch.
LatticeTail convolve(LatticeTail const& a, LatticeTail const& b,
                     ConvolutionMethod method = ConvolutionMethod::automatic, ConvolutionStats* stats = nullptr);

/// Columns x, lower, upper; comment lines prefixed with '#'.
void write_csv(std::ostream& os, LatticeTail const& tail, std::vector<std::string> const& comments = {});

struct LatticeCacheKey
{
  std::uint64_t model_hash = 0;
  double step = 0.0;
  double span = 0.0;
  std::uint64_t grid_fingerprint = 0;
  double eps_trunc = 0.0;

  bool operator==(LatticeCacheKey const&) const = default;
};

/// Compact binary cache. load returns nullopt on a missing file or key mismatch.
void save_binary(std::string const& path, LatticeTail const& tail, LatticeCacheKey const& key);
std::optional<LatticeTail> load_binary(std::string const& path, LatticeCacheKey const& key);
std::string cache_file_name(LatticeCacheKey const& key);

} // namespace cvtail
