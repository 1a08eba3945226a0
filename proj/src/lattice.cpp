#include "cvtail/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

#include "cvtail/errors.hpp"

namespace cvtail {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr std::size_t kFftThreshold = 4096;

std::uint64_t mix(std::uint64_t h, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t double_bits(double v)
{
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// LatticeGrid

LatticeGrid LatticeGrid::from_units(double unit, std::vector<std::int64_t> units, std::string label)
{
  if (!(unit > 0) || !std::isfinite(unit))
    throw std::invalid_argument("lattice unit must be positive");
  if (units.size() < 2 || units[0] != 0)
    throw std::invalid_argument("lattice must start at 0 and hold at least two points");
  bool uniform = true;
  for (std::size_t i = 1; i < units.size(); ++i) {
    if (units[i] <= units[i - 1])
      throw std::invalid_argument("lattice units must increase strictly");
    uniform = uniform && units[i] == static_cast<std::int64_t>(i);
  }
  auto data = std::make_shared<Data>();
  data->unit = unit;
  data->uniform = uniform;
  data->label = std::move(label);
  data->points.resize(static_cast<Eigen::Index>(units.size()));
  std::uint64_t h = mix(1469598103934665603ull, double_bits(unit));
  for (std::size_t i = 0; i < units.size(); ++i) {
    data->points[static_cast<Eigen::Index>(i)] = static_cast<double>(units[i]) * unit;
    h = mix(h, static_cast<std::uint64_t>(units[i]));
  }
  data->fingerprint = h;
  data->units = std::move(units);
  return LatticeGrid(std::move(data));
}

LatticeGrid LatticeGrid::uniform(double step, double span)
{
  if (!(step > 0) || !(span > 0))
    throw std::invalid_argument("uniform lattice: step and span must be positive");
  auto const n = static_cast<std::int64_t>(std::ceil(span / step));
  std::vector<std::int64_t> units(static_cast<std::size_t>(std::max<std::int64_t>(n, 1)) + 1);
  for (std::size_t i = 0; i < units.size(); ++i)
    units[i] = static_cast<std::int64_t>(i);
  return from_units(step, std::move(units), "uniform(step=" + fmt(step) + ", span=" + fmt(span) + ")");
}

LatticeGrid LatticeGrid::hybrid(double step, double growth, double span)
{
  if (!(step > 0) || !(span > 0))
    throw std::invalid_argument("hybrid lattice: step and span must be positive");
  if (!(growth > 0 && growth < 1))
    throw std::invalid_argument("hybrid lattice: growth must lie in (0, 1)");
  auto const linear_end = static_cast<std::int64_t>(std::ceil(1.0 / growth));
  auto const last = static_cast<std::int64_t>(std::ceil(span / step));
  std::vector<std::int64_t> units;
  for (std::int64_t u = 0; u <= std::min(linear_end, last); ++u)
    units.push_back(u);
  while (units.back() < last) {
    auto const u = units.back();
    auto next = static_cast<std::int64_t>(std::ceil(static_cast<double>(u) * (1.0 + growth)));
    units.push_back(std::max(next, u + 1));
  }
  return from_units(step, std::move(units),
                    "hybrid(step=" + fmt(step) + ", growth=" + fmt(growth) + ", span=" + fmt(span) + ")");
}

LatticeGrid LatticeGrid::default_for(double x_max)
{
  if (!(x_max > 0))
    throw std::invalid_argument("default lattice: x_max must be positive");
  if (x_max <= 64.0) {
    double const step = std::exp2(std::floor(std::log2(x_max / 131072.0)));
    return uniform(step, x_max);
  }
  return hybrid(0.0078125, 0.002, x_max);
}

LatticeGrid LatticeGrid::refined() const
{
  auto const& u = data_->units;
  std::vector<std::int64_t> out;
  out.reserve(2 * u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (i > 0)
      out.push_back(u[i - 1] + u[i]);
    out.push_back(2 * u[i]);
  }
  return from_units(unit() / 2, std::move(out), "refined " + data_->label);
}

std::ptrdiff_t LatticeGrid::index_at_or_below(double x) const
{
  if (!(x >= 0))
    return -1;
  auto const& p = data_->points;
  auto const* it = std::upper_bound(p.data(), p.data() + p.size(), x);
  return static_cast<std::ptrdiff_t>(it - p.data()) - 1;
}

std::string LatticeGrid::describe() const
{
  return data_->label + " m=" + std::to_string(size());
}

// ---------------------------------------------------------------------------
// LatticeTail

LatticeTail::LatticeTail(LatticeGrid grid, Eigen::ArrayXd lower, Eigen::ArrayXd upper)
  : grid_(std::move(grid)), lower_(std::move(lower)), upper_(std::move(upper))
{
  auto const m = static_cast<Eigen::Index>(grid_.size());
  if (lower_.size() != m || upper_.size() != m)
    throw std::invalid_argument("lattice tail: array sizes differ from the grid");
  constexpr double tol = 1e-12;
  for (Eigen::Index i = 0; i < m; ++i) {
    double const lo = lower_[i];
    double const up = upper_[i];
    if (!(lo >= 0.0) || !(up <= 1.0 + tol))
      throw std::invalid_argument("lattice tail: values outside [0, 1] at index " + std::to_string(i));
    if (lo > up * (1 + tol) + 1e-300)
      throw std::invalid_argument("lattice tail: lower exceeds upper at index " + std::to_string(i));
    if (i > 0 && (lo > lower_[i - 1] * (1 + tol) + 1e-300 || up > upper_[i - 1] * (1 + tol) + 1e-300))
      throw std::invalid_argument("lattice tail: bracket not nonincreasing at index " + std::to_string(i));
  }
}

Bracket LatticeTail::at(double x) const
{
  if (x < 0)
    return {1.0, 1.0};
  auto const i = grid_.index_at_or_below(x);
  auto const m = static_cast<std::ptrdiff_t>(size());
  if (i < 0)
    return {1.0, 1.0};
  if (x == grid_.point(static_cast<std::size_t>(i)))
    return {lower_[i], upper_[i]};
  // P(S > x) lies between the tails at the neighbouring lattice points.
  double const lo = i + 1 < m ? lower_[i + 1] : 0.0;
  return {lo, upper_[i]};
}

double LatticeTail::max_width() const
{
  return (upper_ - lower_).maxCoeff();
}

LatticeTail discretize(MarginalLaw const& law, LatticeGrid const& grid)
{
  if (law.support_min() < 0)
    throw UnsupportedLaw("lattice brackets need nonnegative support: " + law.describe());
  auto const m = static_cast<Eigen::Index>(grid.size());
  Eigen::ArrayXd upper(m), lower(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    // Rounding up to the lattice keeps P(X > g_i); rounding down moves the
    // mass of [g_i, g_{i+1}) onto g_i.
    upper[i] = law.tail(grid.point(static_cast<std::size_t>(i)));
    lower[i] = i + 1 < m ? law.tail_closed(grid.point(static_cast<std::size_t>(i + 1))) : upper[i];
  }
  return LatticeTail(grid, std::move(lower), std::move(upper));
}

LatticeTail zero_tail(LatticeGrid const& grid)
{
  auto const m = static_cast<Eigen::Index>(grid.size());
  return LatticeTail(grid, Eigen::ArrayXd::Zero(m), Eigen::ArrayXd::Zero(m));
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

struct Pmf
{
  Eigen::ArrayXd p; // mass on lattice points
  double overflow = 0.0;
  Eigen::Index lo = 0, hi = -1; // nonzero range
};

Pmf to_pmf(Eigen::ArrayXd const& tail)
{
  Pmf out;
  auto const m = tail.size();
  out.p.resize(m);
  out.p[0] = std::max(0.0, 1.0 - tail[0]);
  for (Eigen::Index i = 1; i < m; ++i)
    out.p[i] = std::max(0.0, tail[i - 1] - tail[i]);
  out.overflow = tail[m - 1];
  out.lo = m;
  for (Eigen::Index i = 0; i < m; ++i)
    if (out.p[i] > 0) {
      out.lo = i;
      break;
    }
  for (Eigen::Index i = m - 1; i >= 0; --i)
    if (out.p[i] > 0) {
      out.hi = i;
      break;
    }
  return out;
}

Eigen::ArrayXd tails_from_pmf(Eigen::ArrayXd const& c, double overflow)
{
  auto const m = c.size();
  Eigen::ArrayXd t(m);
  t[m - 1] = std::min(1.0, overflow);
  for (Eigen::Index k = m - 2; k >= 0; --k)
    t[k] = std::min(1.0, t[k + 1] + c[k + 1]);
  return t;
}

// Sum of two lattice laws with sums rounded up (round_up) or down onto the grid.
Eigen::ArrayXd direct_bracket(Pmf const& a, Pmf const& b, std::vector<std::int64_t> const& units, bool uniform,
                              bool round_up, double& interior, double& overflow)
{
  auto const m = static_cast<Eigen::Index>(units.size());
  Eigen::ArrayXd c = Eigen::ArrayXd::Zero(m);
  double const a_total = a.p.sum() + a.overflow;
  double const b_interior = b.p.sum();
  double over = a.overflow * (b_interior + b.overflow) + b.overflow * (a_total - a.overflow);

  if (a.hi >= a.lo && b.hi >= b.lo) {
    // suffix[j] = sum of b.p over [j, b.hi]
    Eigen::ArrayXd suffix(b.hi - b.lo + 2);
    suffix[b.hi - b.lo + 1] = 0.0;
    for (Eigen::Index j = b.hi; j >= b.lo; --j)
      suffix[j - b.lo] = suffix[j - b.lo + 1] + b.p[j];

    std::int64_t const last = units.back();
    for (Eigen::Index i = a.lo; i <= a.hi; ++i) {
      double const pi = a.p[i];
      if (pi == 0.0)
        continue;
      std::int64_t const ui = units[static_cast<std::size_t>(i)];
      if (uniform) {
        Eigen::Index const j_end = std::min(b.hi, m - 1 - i);
        for (Eigen::Index j = b.lo; j <= j_end; ++j)
          c[i + j] += pi * b.p[j];
        if (j_end < b.hi)
          over += pi * suffix[std::max(j_end + 1, b.lo) - b.lo];
        continue;
      }
      std::int64_t const t0 = ui + units[static_cast<std::size_t>(b.lo)];
      auto const first = units.begin() + i;
      Eigen::Index k = round_up ? std::lower_bound(first, units.end(), t0) - units.begin()
                                : std::upper_bound(first, units.end(), t0) - units.begin() - 1;
      for (Eigen::Index j = b.lo; j <= b.hi; ++j) {
        std::int64_t const t = ui + units[static_cast<std::size_t>(j)];
        if (t > last) {
          over += pi * suffix[j - b.lo];
          break;
        }
        if (round_up) {
          while (units[static_cast<std::size_t>(k)] < t)
            ++k;
        }
        else {
          while (k + 1 < m && units[static_cast<std::size_t>(k + 1)] <= t)
            ++k;
        }
        c[k] += pi * b.p[j];
      }
    }
  }
  interior = c.sum();
  overflow = over;
  return tails_from_pmf(c, over);
}

std::size_t next_pow2(std::size_t n)
{
  std::size_t p = 1;
  while (p < n)
    p <<= 1;
  return p;
}

// Padded FFT enclosure: |computed - exact| <= err entrywise for the lattice
// sums, so the cdf is bracketed by summing (c - err)_+ and (c + err).
void fft_bracket(Pmf const& a, Pmf const& b, Eigen::Index m, Eigen::ArrayXd& upper, Eigen::ArrayXd& lower,
                 double& err_out, double& interior)
{
  upper = Eigen::ArrayXd::Ones(m);
  lower = Eigen::ArrayXd::Ones(m);
  err_out = 0.0;
  interior = 0.0;
  if (a.hi < a.lo || b.hi < b.lo)
    return;
  auto const la = static_cast<std::size_t>(a.hi + 1);
  auto const lb = static_cast<std::size_t>(b.hi + 1);
  std::size_t const n = next_pow2(la + lb - 1);

  std::vector<double> va(n, 0.0), vb(n, 0.0), vc;
  for (std::size_t i = 0; i < la; ++i)
    va[i] = a.p[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < lb; ++i)
    vb[i] = b.p[static_cast<Eigen::Index>(i)];

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, va);
  fft.fwd(fb, vb);
  for (std::size_t k = 0; k < fa.size(); ++k)
    fa[k] *= fb[k];
  fft.inv(vc, fa, static_cast<Eigen::Index>(n));

  double const na = a.p.matrix().norm();
  double const nb = b.p.matrix().norm();
  double const err = na * nb * (8.0 * std::log2(static_cast<double>(n)) + 16.0) * kEps;
  err_out = err;

  double cs_low = 0.0;  // lower bound on the cdf
  double cs_high = 0.0; // upper bound on the cdf
  for (Eigen::Index i = 0; i < m; ++i) {
    double const ci = static_cast<std::size_t>(i) < vc.size() ? vc[static_cast<std::size_t>(i)] : 0.0;
    cs_low += std::max(0.0, ci - err);
    cs_high += ci + err;
    double const slack = static_cast<double>(i + 2) * kEps;
    upper[i] = std::clamp(1.0 - cs_low + slack, 0.0, 1.0);
    lower[i] = std::clamp(1.0 - cs_high - slack, 0.0, 1.0);
    if (i > 0)
      upper[i] = std::min(upper[i], upper[i - 1]);
  }
  for (Eigen::Index i = m - 2; i >= 0; --i)
    lower[i] = std::max(lower[i], lower[i + 1]);
  interior = 1.0 - 0.5 * (upper[m - 1] + lower[m - 1]);
}

} // namespace

LatticeTail convolve(LatticeTail const& a, LatticeTail const& b, ConvolutionMethod method, ConvolutionStats* stats)
{
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("convolve: operands live on different lattices");
  auto const& grid = a.grid();
  auto const m = static_cast<Eigen::Index>(grid.size());
  if (method == ConvolutionMethod::automatic)
    method = grid.is_uniform() && grid.size() > kFftThreshold ? ConvolutionMethod::fft : ConvolutionMethod::direct;
  if (method == ConvolutionMethod::fft && !grid.is_uniform())
    throw std::invalid_argument("convolve: the fft path needs a uniform lattice");

  Pmf const au = to_pmf(a.upper()), bu = to_pmf(b.upper());
  Pmf const al = to_pmf(a.lower()), bl = to_pmf(b.lower());
  ConvolutionStats st;
  st.used = method;
  Eigen::ArrayXd upper, lower;

  if (method == ConvolutionMethod::direct) {
    upper = direct_bracket(au, bu, grid.all_units(), grid.is_uniform(), true, st.interior_upper, st.overflow_upper);
    lower = direct_bracket(al, bl, grid.all_units(), grid.is_uniform(), false, st.interior_lower, st.overflow_lower);
    // Every entry is a sum of at most m nonnegative products; widen by the
    // matching relative rounding bound so the bracket stays outward.
    double const pad = static_cast<double>(m + 4) * kEps;
    upper = (upper * (1.0 + pad)).min(1.0);
    lower = (lower * (1.0 - pad)).min(upper);
  }
  else {
    Eigen::ArrayXd up_hi, up_lo, lo_hi, lo_lo;
    double err_u = 0, err_l = 0;
    fft_bracket(au, bu, m, up_hi, up_lo, err_u, st.interior_upper);
    fft_bracket(al, bl, m, lo_hi, lo_lo, err_l, st.interior_lower);
    upper = up_hi;
    lower = lo_lo.min(upper);
    st.overflow_upper = upper[m - 1];
    st.overflow_lower = lower[m - 1];
    st.fft_error_bound = std::max(err_u, err_l);
  }
  if (stats)
    *stats = st;
  return LatticeTail(grid, std::move(lower), std::move(upper));
}

// ---------------------------------------------------------------------------
// Serialization

void write_csv(std::ostream& os, LatticeTail const& tail, std::vector<std::string> const& comments)
{
  for (auto const& c : comments)
    os << "# " << c << "\n";
  os << "x,lower,upper\n";
  char buf[128];
  for (std::size_t i = 0; i < tail.size(); ++i) {
    auto const k = static_cast<Eigen::Index>(i);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", tail.grid().point(i), tail.lower()[k], tail.upper()[k]);
    os << buf;
  }
}

namespace {

constexpr char kMagic[4] = {'C', 'V', 'T', 'L'};
constexpr std::uint32_t kBinaryVersion = 1;

template <class T>
void put(std::ostream& os, T const& v)
{
  os.write(reinterpret_cast<char const*>(&v), sizeof v);
}

template <class T>
bool get(std::istream& is, T& v)
{
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof v));
}

} // namespace

std::string cache_file_name(LatticeCacheKey const& key)
{
  std::uint64_t h = mix(1469598103934665603ull, key.model_hash);
  h = mix(h, double_bits(key.step));
  h = mix(h, double_bits(key.span));
  h = mix(h, key.grid_fingerprint);
  h = mix(h, double_bits(key.eps_trunc));
  char buf[40];
  std::snprintf(buf, sizeof buf, "tail-%016llx.bin", static_cast<unsigned long long>(h));
  return buf;
}

void save_binary(std::string const& path, LatticeTail const& tail, LatticeCacheKey const& key)
{
  std::string const tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os)
      throw std::runtime_error("cannot write cache file " + tmp);
    os.write(kMagic, 4);
    put(os, kBinaryVersion);
    put(os, key.model_hash);
    put(os, key.step);
    put(os, key.span);
    put(os, key.grid_fingerprint);
    put(os, key.eps_trunc);
    put(os, tail.grid().unit());
    std::uint64_t const m = tail.size();
    put(os, m);
    for (auto u : tail.grid().all_units())
      put(os, u);
    os.write(reinterpret_cast<char const*>(tail.lower().data()), static_cast<std::streamsize>(m * sizeof(double)));
    os.write(reinterpret_cast<char const*>(tail.upper().data()), static_cast<std::streamsize>(m * sizeof(double)));
    if (!os)
      throw std::runtime_error("short write on cache file " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::optional<LatticeTail> load_binary(std::string const& path, LatticeCacheKey const& key)
{
  std::ifstream is(path, std::ios::binary);
  if (!is)
    return std::nullopt;
  char magic[4];
  std::uint32_t version = 0;
  LatticeCacheKey stored;
  double unit = 0;
  std::uint64_t m = 0;
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0 || !get(is, version) || version != kBinaryVersion)
    return std::nullopt;
  if (!get(is, stored.model_hash) || !get(is, stored.step) || !get(is, stored.span) ||
      !get(is, stored.grid_fingerprint) || !get(is, stored.eps_trunc) || !get(is, unit) || !get(is, m))
    return std::nullopt;
  if (!(stored == key) || m < 2 || m > (1ull << 32))
    return std::nullopt;
  std::vector<std::int64_t> units(m);
  for (auto& u : units)
    if (!get(is, u))
      return std::nullopt;
  Eigen::ArrayXd lower(static_cast<Eigen::Index>(m)), upper(static_cast<Eigen::Index>(m));
  if (!is.read(reinterpret_cast<char*>(lower.data()), static_cast<std::streamsize>(m * sizeof(double))) ||
      !is.read(reinterpret_cast<char*>(upper.data()), static_cast<std::streamsize>(m * sizeof(double))))
    return std::nullopt;
  auto grid = LatticeGrid::from_units(unit, std::move(units), "cached");
  if (grid.fingerprint() != key.grid_fingerprint)
    return std::nullopt;
  return LatticeTail(std::move(grid), std::move(lower), std::move(upper));
}

} // namespace cvtail
