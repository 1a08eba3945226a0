#include "cvtail/dist_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cvtail {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt_num(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require(bool ok, char const* what)
{
  if (!ok)
    throw std::invalid_argument(what);
}

// Lifted-geometric tail for x >= 1: with x = t 2^l, t in [1, 2),
// P = q^{l+1} + (1 - q) q^l (2 - t).
double lifted_geometric_tail(double q, double x)
{
  if (!(x >= 1.0))
    return 1.0;
  if (std::isinf(x))
    return 0.0;
  int e = 0;
  double const m = std::frexp(x, &e); // x = m 2^e, m in [0.5, 1)
  int const l = e - 1;
  double const t = 2.0 * m;
  double const ql = std::pow(q, l);
  return ql * (q + (1.0 - q) * (2.0 - t));
}

double lifted_geometric_quantile(double q, double p)
{
  // tail(2^l) = q^l and tail is linear in x on [2^l, 2^{l+1}).
  double l = std::floor(std::log(p) / std::log(q));
  // Guard the floor against rounding: want q^{l+1} < p <= q^l.
  while (l > 0 && std::pow(q, l) < p)
    l -= 1;
  while (std::pow(q, l + 1) >= p)
    l += 1;
  double const ql = std::pow(q, l);
  double const t = 2.0 - (p - q * ql) / ((1.0 - q) * ql);
  return std::ldexp(std::clamp(t, 1.0, 2.0), static_cast<int>(l));
}

} // namespace

std::string ExtendedReal::to_string() const
{
  return infinite_ ? std::string("inf") : fmt_num(value_);
}

// ---------------------------------------------------------------------------
// MarginalLaw

MarginalLaw::MarginalLaw(Family family) : family_(std::move(family))
{
  std::visit(overloaded{
               [](Pareto const& f) {
                 require(f.alpha > 0 && std::isfinite(f.alpha), "pareto: alpha must be positive");
                 require(f.scale > 0 && std::isfinite(f.scale), "pareto: scale must be positive");
               },
               [](Exponential const& f) {
                 require(f.rate > 0 && std::isfinite(f.rate), "exponential: rate must be positive");
               },
               [](LiftedGeometric const& f) {
                 require(f.q > 0 && f.q < 1, "lifted geometric: q must lie in (0, 1)");
               },
               [](LatticeLaw const& f) {
                 require(!f.points.empty() && f.points.size() == f.tails.size(),
                         "lattice: points and tails must be non-empty and equally long");
                 for (std::size_t i = 0; i < f.points.size(); ++i) {
                   require(std::isfinite(f.points[i]), "lattice: points must be finite");
                   require(f.tails[i] >= 0 && f.tails[i] <= 1, "lattice: tails must lie in [0, 1]");
                   if (i > 0) {
                     require(f.points[i] > f.points[i - 1], "lattice: points must increase strictly");
                     require(f.tails[i] <= f.tails[i - 1], "lattice: tails must be nonincreasing");
                   }
                 }
                 require(f.tails.back() == 0.0, "lattice: last tail must be 0");
               },
               [](Degenerate const& f) { require(std::isfinite(f.point), "degenerate: point must be finite"); },
             },
             family_);
}

double MarginalLaw::tail(double x) const
{
  return std::visit(overloaded{
                      [x](Pareto const& f) { return x < f.scale ? 1.0 : std::pow(f.scale / x, f.alpha); },
                      [x](Exponential const& f) { return x < 0 ? 1.0 : std::exp(-f.rate * x); },
                      [x](LiftedGeometric const& f) { return lifted_geometric_tail(f.q, x); },
                      [x](LatticeLaw const& f) {
                        auto const it = std::upper_bound(f.points.begin(), f.points.end(), x);
                        if (it == f.points.begin())
                          return 1.0;
                        return f.tails[static_cast<std::size_t>(it - f.points.begin()) - 1];
                      },
                      [x](Degenerate const& f) { return x < f.point ? 1.0 : 0.0; },
                    },
                    family_);
}

double MarginalLaw::tail_closed(double x) const
{
  return std::visit(overloaded{
                      [x](Pareto const& f) { return x <= f.scale ? 1.0 : std::pow(f.scale / x, f.alpha); },
                      [x](Exponential const& f) { return x <= 0 ? 1.0 : std::exp(-f.rate * x); },
                      [x](LiftedGeometric const& f) { return lifted_geometric_tail(f.q, x); },
                      [x](LatticeLaw const& f) {
                        auto const it = std::lower_bound(f.points.begin(), f.points.end(), x);
                        if (it == f.points.begin())
                          return 1.0;
                        return f.tails[static_cast<std::size_t>(it - f.points.begin()) - 1];
                      },
                      [x](Degenerate const& f) { return x <= f.point ? 1.0 : 0.0; },
                    },
                    family_);
}

double MarginalLaw::mass_between(double a, double b) const
{
  if (!(b > a))
    return 0.0;
  return std::visit(overloaded{
                      [a, b](Pareto const& f) {
                        double const lo = std::max(a, f.scale);
                        if (b <= lo)
                          return 0.0;
                        return std::pow(f.scale / lo, f.alpha) * -std::expm1(f.alpha * std::log(lo / b));
                      },
                      [a, b](Exponential const& f) {
                        double const lo = std::max(a, 0.0);
                        if (b <= lo)
                          return 0.0;
                        return std::exp(-f.rate * lo) * -std::expm1(-f.rate * (b - lo));
                      },
                      [this, a, b](auto const&) { return std::max(0.0, tail(a) - tail(b)); },
                    },
                    family_);
}

double MarginalLaw::quantile(double p) const
{
  if (!(p < 1.0))
    return support_min();
  if (!(p > 0.0)) {
    auto const hi = support_max();
    return hi ? *hi : std::numeric_limits<double>::infinity();
  }
  double x = std::visit(overloaded{
                          [p](Pareto const& f) { return f.scale * std::pow(p, -1.0 / f.alpha); },
                          [p](Exponential const& f) { return -std::log(p) / f.rate; },
                          [p](LiftedGeometric const& f) { return lifted_geometric_quantile(f.q, p); },
                          [p](LatticeLaw const& f) {
                            for (std::size_t i = 0; i < f.tails.size(); ++i)
                              if (f.tails[i] <= p)
                                return f.points[i];
                            return f.points.back();
                          },
                          [](Degenerate const& f) { return f.point; },
                        },
                        family_);
  // Closed forms can land one rounding step short of the infimum.
  for (int i = 0; i < 64 && tail(x) > p; ++i)
    x = std::nextafter(x, std::numeric_limits<double>::infinity());
  return x;
}

ExtendedReal MarginalLaw::mean() const
{
  return std::visit(overloaded{
                      [](Pareto const& f) {
                        if (f.alpha <= 1.0)
                          return ExtendedReal::infinity();
                        return ExtendedReal(f.alpha * f.scale / (f.alpha - 1.0));
                      },
                      [](Exponential const& f) { return ExtendedReal(1.0 / f.rate); },
                      [](LiftedGeometric const& f) {
                        // E(1+U) E 2^G, and E 2^G = (1-q)/(1-2q) diverges for q >= 1/2.
                        if (f.q >= 0.5)
                          return ExtendedReal::infinity();
                        return ExtendedReal(1.5 * (1.0 - f.q) / (1.0 - 2.0 * f.q));
                      },
                      [](LatticeLaw const& f) {
                        double m = f.points[0] * (1.0 - f.tails[0]);
                        for (std::size_t i = 1; i < f.points.size(); ++i)
                          m += f.points[i] * (f.tails[i - 1] - f.tails[i]);
                        return ExtendedReal(m);
                      },
                      [](Degenerate const& f) { return ExtendedReal(f.point); },
                    },
                    family_);
}

double MarginalLaw::support_min() const
{
  return std::visit(overloaded{
                      [](Pareto const& f) { return f.scale; },
                      [](Exponential const&) { return 0.0; },
                      [](LiftedGeometric const&) { return 1.0; },
                      [](LatticeLaw const& f) {
                        if (f.tails[0] < 1.0)
                          return f.points[0];
                        for (std::size_t i = 1; i < f.points.size(); ++i)
                          if (f.tails[i] < f.tails[i - 1])
                            return f.points[i];
                        return f.points.back();
                      },
                      [](Degenerate const& f) { return f.point; },
                    },
                    family_);
}

std::optional<double> MarginalLaw::support_max() const
{
  return std::visit(overloaded{
                      [](LatticeLaw const& f) -> std::optional<double> {
                        for (std::size_t i = 0; i < f.points.size(); ++i)
                          if (f.tails[i] == 0.0)
                            return f.points[i];
                        return f.points.back();
                      },
                      [](Degenerate const& f) -> std::optional<double> { return f.point; },
                      [](auto const&) -> std::optional<double> { return std::nullopt; },
                    },
                    family_);
}

double MarginalLaw::sample(RngStream& stream) const
{
  return std::visit(overloaded{
                      [&](Pareto const& f) { return f.scale * std::pow(stream.uniform(), -1.0 / f.alpha); },
                      [&](Exponential const& f) { return -std::log(stream.uniform()) / f.rate; },
                      [&](LiftedGeometric const& f) {
                        double const g = std::floor(std::log(stream.uniform()) / std::log(f.q));
                        double const u = stream.uniform();
                        return std::ldexp(1.0 + u, static_cast<int>(g));
                      },
                      [&](LatticeLaw const&) { return quantile(stream.uniform()); },
                      [](Degenerate const& f) { return f.point; },
                    },
                    family_);
}

std::vector<double> MarginalLaw::sample(RngStream& stream, std::size_t n) const
{
  std::vector<double> out(n);
  for (auto& v : out)
    v = sample(stream);
  return out;
}

std::string MarginalLaw::describe() const
{
  return std::visit(overloaded{
                      [](Pareto const& f) {
                        return "pareto(alpha=" + fmt_num(f.alpha) + ", scale=" + fmt_num(f.scale) + ")";
                      },
                      [](Exponential const& f) { return "exponential(rate=" + fmt_num(f.rate) + ")"; },
                      [](LiftedGeometric const& f) { return "lifted_geometric(q=" + fmt_num(f.q) + ")"; },
                      [](LatticeLaw const& f) {
                        return "lattice(" + std::to_string(f.points.size()) + " points)";
                      },
                      [](Degenerate const& f) { return "degenerate(point=" + fmt_num(f.point) + ")"; },
                    },
                    family_);
}

bool operator==(MarginalLaw const& a, MarginalLaw const& b)
{
  return a.family_ == b.family_;
}

// ---------------------------------------------------------------------------
// Special functions

double zeta4_constant()
{
  static double const value = [] {
    // Sum small terms first; the remainder sum_{k>M} k^-4 lies between
    // int_{M+1}^inf and int_M^inf of x^-4, and the midpoint rule
    // int_{M+1/2}^inf sits inside that bracket.
    constexpr int M = 20000;
    double s = 0.0;
    for (int k = M; k >= 1; --k) {
      double const kk = static_cast<double>(k);
      s += 1.0 / (kk * kk * kk * kk);
    }
    double const mid = M + 0.5;
    return s + 1.0 / (3.0 * mid * mid * mid);
  }();
  return value;
}

double hurwitz_zeta(double s, double a)
{
  if (!(s > 1.0) || !(a > 0.0))
    throw std::invalid_argument("hurwitz_zeta: need s > 1 and a > 0");
  constexpr double kShift = 32.0;
  double direct = 0.0;
  double b = a;
  if (a < kShift) {
    int const k = static_cast<int>(std::ceil(kShift - a));
    for (int i = k - 1; i >= 0; --i)
      direct += std::pow(a + i, -s);
    b = a + k;
  }
  // Euler-Maclaurin remainder at b.
  double const bs = std::pow(b, -s);
  double const b2 = b * b;
  double tail = b * bs / (s - 1.0) + 0.5 * bs;
  double rising = s;       // s (s+1) ... (s + 2j - 2)
  double power = bs / b;   // b^{-s - 2j + 1}
  constexpr double kBernoulliOverFactorial[] = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0,
                                                1.0 / 47900160.0};
  for (int j = 0; j < 5; ++j) {
    tail += kBernoulliOverFactorial[j] * rising * power;
    rising *= (s + 2 * j + 1) * (s + 2 * j + 2);
    power /= b2;
  }
  return direct + tail;
}

// ---------------------------------------------------------------------------
// CountingLaw

namespace {

constexpr std::size_t kTailTable = 4096;

double poisson_pmf(double lambda, double n)
{
  return std::exp(-lambda + n * std::log(lambda) - std::lgamma(n + 1.0));
}

double poisson_tail(double lambda, double n)
{
  if (n < lambda) {
    double cdf = 0.0;
    for (double k = 0; k <= n; k += 1)
      cdf += poisson_pmf(lambda, k);
    return std::max(0.0, 1.0 - cdf);
  }
  // Terms decrease beyond the mode; sum upward until negligible.
  double sum = 0.0;
  for (double k = n + 1;; k += 1) {
    double const t = poisson_pmf(lambda, k);
    sum += t;
    if (t <= 1e-18 * sum || t == 0.0)
      break;
  }
  return sum;
}

// P(eta > n) for real-valued n >= 0 (n integral); avoids size_t overflow.
double counting_tail(CountingLaw::Family const& family, double n)
{
  return std::visit(overloaded{
                      [n](Poisson const& f) { return poisson_tail(f.lambda, n); },
                      [n](Zeta4 const&) { return hurwitz_zeta(4.0, n + 2.0) / zeta4_constant(); },
                      [n](FiniteSupport const& f) {
                        double s = 0.0;
                        for (std::size_t k = f.pmf.size(); k-- > 0;) {
                          if (static_cast<double>(k) <= n)
                            break;
                          s += f.pmf[k];
                        }
                        return s;
                      },
                      [n](GeometricCount const& f) { return std::pow(f.q, n + 1.0); },
                    },
                    family);
}

} // namespace

CountingLaw::CountingLaw(Family family) : family_(std::move(family))
{
  std::visit(overloaded{
               [](Poisson const& f) { require(f.lambda > 0 && std::isfinite(f.lambda), "poisson: lambda must be positive"); },
               [](Zeta4 const&) {},
               [](FiniteSupport const& f) {
                 require(!f.pmf.empty(), "finite support: empty pmf");
                 double s = 0.0;
                 for (double p : f.pmf) {
                   require(p >= 0 && std::isfinite(p), "finite support: pmf entries must be nonnegative");
                   s += p;
                 }
                 require(std::abs(s - 1.0) <= 1e-12, "finite support: pmf must sum to 1");
                 require(f.pmf[0] < 1.0, "counting law must be nondegenerate at zero");
               },
               [](GeometricCount const& f) { require(f.q > 0 && f.q < 1, "geometric: q must lie in (0, 1)"); },
             },
             family_);

  std::size_t limit = kTailTable;
  if (auto const* fs = std::get_if<FiniteSupport>(&family_))
    limit = fs->pmf.size();
  table_tail_.reserve(limit);
  for (std::size_t n = 0; n < limit; ++n) {
    double const t = counting_tail(family_, static_cast<double>(n));
    table_tail_.push_back(t);
    if (t == 0.0)
      break;
  }
}

CountingLaw CountingLaw::point_mass(std::size_t n)
{
  if (n == 0)
    throw std::invalid_argument("counting law must be nondegenerate at zero");
  std::vector<double> pmf(n + 1, 0.0);
  pmf[n] = 1.0;
  return CountingLaw(FiniteSupport{std::move(pmf)});
}

double CountingLaw::pmf(std::size_t n) const
{
  double const x = static_cast<double>(n);
  return std::visit(overloaded{
                      [x](Poisson const& f) { return poisson_pmf(f.lambda, x); },
                      [x](Zeta4 const&) {
                        double const m = x + 1.0;
                        return 1.0 / (m * m * m * m * zeta4_constant());
                      },
                      [n](FiniteSupport const& f) { return n < f.pmf.size() ? f.pmf[n] : 0.0; },
                      [x](GeometricCount const& f) { return (1.0 - f.q) * std::pow(f.q, x); },
                    },
                    family_);
}

double CountingLaw::tail(std::size_t n) const
{
  if (n < table_tail_.size())
    return table_tail_[n];
  if (!table_tail_.empty() && table_tail_.back() == 0.0)
    return 0.0;
  return counting_tail(family_, static_cast<double>(n));
}

double CountingLaw::tail_real(double x) const
{
  if (x < 0)
    return 1.0;
  double const n = std::floor(x);
  if (n < static_cast<double>(table_tail_.size()))
    return table_tail_[static_cast<std::size_t>(n)];
  if (!table_tail_.empty() && table_tail_.back() == 0.0)
    return 0.0;
  if (std::isinf(n))
    return 0.0;
  return counting_tail(family_, n);
}

std::optional<std::size_t> CountingLaw::support_max() const
{
  if (auto const* fs = std::get_if<FiniteSupport>(&family_)) {
    for (std::size_t k = fs->pmf.size(); k-- > 0;)
      if (fs->pmf[k] > 0)
        return k;
  }
  return std::nullopt;
}

ExtendedReal CountingLaw::moment_boundary() const
{
  if (std::holds_alternative<Zeta4>(family_))
    return ExtendedReal(3.0);
  return ExtendedReal::infinity();
}

MomentResult CountingLaw::moment(double r) const
{
  if (!(r > 0))
    throw std::invalid_argument("moment order must be positive");
  using K = MomentResult::Kind;
  return std::visit(
    overloaded{
      [r](Zeta4 const&) {
        if (r >= 3.0)
          return MomentResult{K::infinite, std::numeric_limits<double>::infinity()};
        // sum_{m>=1} m^r (m+1)^-4: direct part, then expand
        // (1 + 1/m)^-4 = sum_j (-1)^j C(j+3,3) m^-j for the remainder.
        constexpr int M = 1000;
        double direct = 0.0;
        for (int m = M - 1; m >= 1; --m) {
          double const mp = m + 1.0;
          direct += std::pow(static_cast<double>(m), r) / (mp * mp * mp * mp);
        }
        double rem = 0.0;
        for (int j = 0; j < 14; ++j) {
          double const c = ((j % 2) ? -1.0 : 1.0) * (j + 1.0) * (j + 2.0) * (j + 3.0) / 6.0;
          rem += c * hurwitz_zeta(4.0 + j - r, static_cast<double>(M));
        }
        return MomentResult{K::finite, (direct + rem) / zeta4_constant()};
      },
      [r, this](auto const& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, FiniteSupport>) {
          double s = 0.0;
          for (std::size_t n = f.pmf.size(); n-- > 1;)
            s += std::pow(static_cast<double>(n), r) * f.pmf[n];
          return MomentResult{K::finite, s};
        }
        else {
          // Light-tailed families: terms eventually decrease geometrically.
          double s = 0.0;
          double prev = 0.0;
          for (std::size_t n = 1; n < 100000000; ++n) {
            double const t = std::pow(static_cast<double>(n), r) * pmf(n);
            s += t;
            if (t < prev && t <= 1e-13 * s)
              break;
            prev = t;
          }
          return MomentResult{K::finite, s};
        }
      },
    },
    family_);
}

std::optional<std::size_t> CountingLaw::truncation_point(double eps, std::size_t n_cap) const
{
  if (!(eps > 0))
    throw std::invalid_argument("truncation eps must be positive");
  if (tail(n_cap) > eps)
    return std::nullopt;
  // tail is nonincreasing: exponential search then bisection.
  std::size_t hi = 1;
  while (hi < n_cap && tail(hi) > eps)
    hi = std::min(n_cap, hi * 2);
  std::size_t lo = 0;
  if (tail(0) <= eps)
    return 0;
  while (hi - lo > 1) {
    std::size_t const mid = lo + (hi - lo) / 2;
    if (tail(mid) <= eps)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::size_t CountingLaw::invert_tail(double v, std::size_t n_min) const
{
  // smallest n >= n_min with P(eta > n) <= v
  std::size_t n = n_min;
  for (; n < table_tail_.size(); ++n)
    if (table_tail_[n] <= v)
      return n;
  if (!table_tail_.empty() && table_tail_.back() == 0.0)
    return table_tail_.size() - 1;
  std::size_t lo = n == 0 ? 0 : n - 1; // tail(lo) > v
  std::size_t step = 1;
  std::size_t hi = n;
  while (tail(hi) > v) {
    lo = hi;
    hi += step;
    step *= 2;
  }
  while (hi - lo > 1) {
    std::size_t const mid = lo + (hi - lo) / 2;
    if (tail(mid) <= v)
      hi = mid;
    else
      lo = mid;
  }
  return std::max(hi, n_min);
}

std::size_t CountingLaw::sample(RngStream& stream) const
{
  double const v = stream.uniform();
  if (auto const* g = std::get_if<GeometricCount>(&family_)) {
    double const k = std::ceil(std::log(v) / std::log(g->q)) - 1.0;
    return k <= 0 ? 0 : static_cast<std::size_t>(k);
  }
  return invert_tail(v, 0);
}

std::size_t CountingLaw::sample_at_least(RngStream& stream, std::size_t n_min) const
{
  if (n_min == 0)
    return sample(stream);
  double const v = stream.uniform() * tail(n_min - 1);
  return invert_tail(v, n_min);
}

std::vector<std::size_t> CountingLaw::sample(RngStream& stream, std::size_t n) const
{
  std::vector<std::size_t> out(n);
  for (auto& v : out)
    v = sample(stream);
  return out;
}

std::string CountingLaw::describe() const
{
  return std::visit(overloaded{
                      [](Poisson const& f) { return "poisson(lambda=" + fmt_num(f.lambda) + ")"; },
                      [](Zeta4 const&) { return std::string("zeta4"); },
                      [](FiniteSupport const& f) {
                        std::ostringstream os;
                        os << "finite(";
                        for (std::size_t i = 0; i < f.pmf.size(); ++i)
                          os << (i ? "," : "") << fmt_num(f.pmf[i]);
                        os << ")";
                        return os.str();
                      },
                      [](GeometricCount const& f) { return "geometric(q=" + fmt_num(f.q) + ")"; },
                    },
                    family_);
}

} // namespace cvtail
