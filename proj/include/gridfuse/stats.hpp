#pragma once

// Paired-comparison statistics: TOST equivalence with a margin sweep, Cohen's
// d with approximate and exact intervals, Holm step-down correction, exact
// directional sign test, spatial block bootstrap and Bayes factors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "gridfuse/error.hpp"
#include "gridfuse/metrics.hpp"
#include "gridfuse/random.hpp"

namespace gridfuse::stats {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double v) const { return lo <= v && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Differences x - y per pair, with the polarity of the metric they came from.
struct PairedSample {
  std::vector<double> diffs;
  Polarity polarity = Polarity::HigherIsBetter;

  [[nodiscard]] std::size_t n() const { return diffs.size(); }
};

[[nodiscard]] inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator).
[[nodiscard]] inline double stddev(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

[[nodiscard]] inline double t_quantile(double p, double df) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

[[nodiscard]] inline double t_cdf(double t, double df) {
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), t);
}

[[nodiscard]] inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------
// TOST

struct MarginCheck {
  double multiplier = 1.0;
  double margin = 0.0;
  double p = 1.0;
  bool equivalent = false;
};

inline constexpr std::array<double, 5> kMarginSweep{0.5, 0.75, 1.0, 1.5, 2.0};

struct TostResult {
  double delta = 0.0;
  double alpha = 0.05;
  double mean_diff = 0.0;
  double p_lower = 1.0;  // H0: mean <= -delta
  double p_upper = 1.0;  // H0: mean >= +delta
  double p = 1.0;
  Interval ci;  // (1 - 2 alpha) interval for the mean
  bool equivalent = false;
  bool degenerate = false;  // zero variance; verdict from |mean| < delta
  std::vector<MarginCheck> sweep;
  std::optional<double> smallest_passing_margin;
  double breakpoint = 0.0;  // margins above this pass
};

[[nodiscard]] inline TostResult tost(const PairedSample& sample, double delta, double alpha = 0.05) {
  if (sample.n() < 2) throw DomainError("TOST needs at least two pairs");
  if (!(delta > 0.0)) throw DomainError("TOST margin must be positive");
  TostResult r;
  r.delta = delta;
  r.alpha = alpha;
  r.mean_diff = mean(sample.diffs);
  const double sd = stddev(sample.diffs);
  const double n = static_cast<double>(sample.n());
  const double df = n - 1.0;

  if (sd == 0.0) {
    r.degenerate = true;
    r.ci = {r.mean_diff, r.mean_diff};
    r.breakpoint = std::abs(r.mean_diff);
    auto verdict = [&](double m) { return std::abs(r.mean_diff) < m; };
    r.equivalent = verdict(delta);
    r.p_lower = r.p_upper = r.p = r.equivalent ? 0.0 : 1.0;
    for (double k : kMarginSweep) {
      const bool eq = verdict(k * delta);
      r.sweep.push_back({k, k * delta, eq ? 0.0 : 1.0, eq});
      if (eq && !r.smallest_passing_margin) r.smallest_passing_margin = k * delta;
    }
    return r;
  }

  const double se = sd / std::sqrt(n);
  const double tq = t_quantile(1.0 - alpha, df);
  r.ci = {r.mean_diff - tq * se, r.mean_diff + tq * se};
  r.breakpoint = std::max(std::abs(r.ci.lo), std::abs(r.ci.hi));
  auto one = [&](double margin) {
    const double pl = 1.0 - t_cdf((r.mean_diff + margin) / se, df);
    const double pu = t_cdf((r.mean_diff - margin) / se, df);
    return std::pair{pl, pu};
  };
  std::tie(r.p_lower, r.p_upper) = one(delta);
  r.p = std::max(r.p_lower, r.p_upper);
  r.equivalent = r.ci.lo > -delta && r.ci.hi < delta;
  for (double k : kMarginSweep) {
    const double margin = k * delta;
    const auto [pl, pu] = one(margin);
    const bool eq = r.ci.lo > -margin && r.ci.hi < margin;
    r.sweep.push_back({k, margin, std::max(pl, pu), eq});
    if (eq && !r.smallest_passing_margin) r.smallest_passing_margin = margin;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Noncentral t

// CDF of the noncentral t distribution with `df` degrees of freedom and
// noncentrality `ncp`, summed as a Poisson mixture of incomplete beta terms
// outward from the Poisson mode.
[[nodiscard]] inline double noncentral_t_cdf(double t, double df, double ncp) {
  if (!(df > 0.0)) throw DomainError("noncentral t needs positive degrees of freedom");
  if (std::isnan(t) || std::isnan(ncp)) throw DomainError("noncentral t arguments must not be NaN");
  if (t == std::numeric_limits<double>::infinity()) return 1.0;
  if (t == -std::numeric_limits<double>::infinity()) return 0.0;
  if (t < 0.0) return 1.0 - noncentral_t_cdf(-t, df, -ncp);
  if (ncp == 0.0) return t_cdf(t, df);

  const double x = t * t / (t * t + df);
  const double lambda = 0.5 * ncp * ncp;
  const double log_lambda = std::log(lambda);
  const double log_abs_ncp = std::log(std::abs(ncp));
  const double sign = ncp < 0.0 ? -1.0 : 1.0;
  const double b = 0.5 * df;

  auto term = [&](long j) {
    const double jd = static_cast<double>(j);
    const double base = -lambda + jd * log_lambda;
    const double pj = std::exp(base - std::lgamma(jd + 1.0));
    const double qj = sign * std::exp(base + log_abs_ncp - 0.5 * std::numbers::ln2 - std::lgamma(jd + 1.5));
    double v = 0.0;
    if (x > 0.0) {
      v = pj * boost::math::ibeta(jd + 0.5, b, x) + qj * boost::math::ibeta(jd + 1.0, b, x);
    }
    return std::pair{v, pj + std::abs(qj)};
  };

  // Kahan-compensated accumulation.
  double sum = 0.0;
  double comp = 0.0;
  auto add = [&](double v) {
    const double y = v - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
  };

  constexpr double kTol = 1e-17;
  constexpr long kMaxTerms = 200000;
  const long mode = static_cast<long>(std::floor(lambda));
  long used = 0;
  for (long j = mode; j >= 0; --j) {
    const auto [v, weight] = term(j);
    add(v);
    if (++used > kMaxTerms) throw ConvergenceError("noncentral t series did not converge");
    if (weight < kTol && j < mode) break;
  }
  for (long j = mode + 1;; ++j) {
    const auto [v, weight] = term(j);
    add(v);
    if (++used > kMaxTerms) throw ConvergenceError("noncentral t series did not converge");
    if (weight < kTol) break;
  }
  const double F = normal_cdf(-ncp) + 0.5 * sum;
  return std::clamp(F, 0.0, 1.0);
}

// Noncentrality at which F(t; df, ncp) equals `target`. F decreases in ncp.
[[nodiscard]] inline double solve_noncentrality(double t, double df, double target) {
  const double width = std::abs(t) + 10.0;
  double lo = -width;
  double hi = width;
  auto f = [&](double ncp) { return noncentral_t_cdf(t, df, ncp) - target; };
  for (int k = 0; f(lo) < 0.0; ++k) {
    if (k > 60) throw ConvergenceError("could not bracket noncentrality (lower)");
    lo -= width * (1 << std::min(k, 20));
  }
  for (int k = 0; f(hi) > 0.0; ++k) {
    if (k > 60) throw ConvergenceError("could not bracket noncentrality (upper)");
    hi += width * (1 << std::min(k, 20));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-10 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Effect sizes

struct EffectSize {
  double d = 0.0;
  std::size_t n = 0;
  Interval ci_hedges;
  Interval ci_noncentral;
};

[[nodiscard]] inline Interval hedges_olkin_ci(double d, std::size_t n, double level = 0.95) {
  const double nn = static_cast<double>(n);
  const double tq = t_quantile(0.5 + 0.5 * level, nn - 1.0);
  const double half = tq * std::sqrt(1.0 / nn + d * d / (2.0 * (nn - 1.0)));
  return {d - half, d + half};
}

[[nodiscard]] inline Interval noncentral_ci(double d, std::size_t n, double level = 0.95) {
  const double nn = static_cast<double>(n);
  const double a = 1.0 - level;
  const double t_obs = d * std::sqrt(nn);
  const double lo = solve_noncentrality(t_obs, nn - 1.0, 1.0 - 0.5 * a);
  const double hi = solve_noncentrality(t_obs, nn - 1.0, 0.5 * a);
  return {lo / std::sqrt(nn), hi / std::sqrt(nn)};
}

[[nodiscard]] inline EffectSize effect_size_from_d(double d, std::size_t n) {
  if (n < 2) throw DomainError("effect size needs at least two pairs");
  return {d, n, hedges_olkin_ci(d, n), noncentral_ci(d, n)};
}

[[nodiscard]] inline EffectSize cohens_d(const PairedSample& sample) {
  if (sample.n() < 2) throw DomainError("effect size needs at least two pairs");
  const double sd = stddev(sample.diffs);
  if (sd == 0.0) throw DegenerateVarianceError("Cohen's d is undefined for zero-variance differences");
  return effect_size_from_d(mean(sample.diffs) / sd, sample.n());
}

// ---------------------------------------------------------------------------
// Multiplicity

struct HolmResult {
  std::vector<bool> reject;
  std::vector<double> adjusted;
};

[[nodiscard]] inline HolmResult holm_bonferroni(std::span<const double> p, double alpha = 0.05) {
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("p-values must lie in [0, 1]");
  }
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  HolmResult r{std::vector<bool>(m, false), std::vector<double>(m, 1.0)};
  double running = 0.0;
  bool stopped = false;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t idx = order[k];
    const double factor = static_cast<double>(m - k);
    running = std::max(running, std::min(1.0, factor * p[idx]));
    r.adjusted[idx] = running;
    if (!stopped && p[idx] <= alpha / factor) {
      r.reject[idx] = true;
    } else {
      stopped = true;
    }
  }
  return r;
}

[[nodiscard]] inline std::vector<bool> bonferroni(std::span<const double> p, double alpha = 0.05) {
  std::vector<bool> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = p[k] <= alpha / static_cast<double>(p.size());
  return out;
}

// P(X >= k) for X ~ Binomial(n, 1/2).
[[nodiscard]] inline double binomial_direction(int k, int n) {
  if (n < 0 || k < 0 || k > n) throw DomainError("binomial_direction needs 0 <= k <= n");
  if (k == 0) return 1.0;
  const boost::math::binomial_distribution<double> bin(n, 0.5);
  return boost::math::cdf(boost::math::complement(bin, k - 1));
}

// Number of pairs in which the first arm is better under the polarity.
[[nodiscard]] inline int count_favouring(const PairedSample& s) {
  int k = 0;
  for (double d : s.diffs) k += s.polarity == Polarity::HigherIsBetter ? d > 0.0 : d < 0.0;
  return k;
}

// ---------------------------------------------------------------------------
// Spatial block bootstrap

struct DeltaField {
  int width = 0;
  int height = 0;
  std::vector<double> delta;  // row-major
  std::vector<bool> mask;     // cells that enter the statistic
};

struct BlockBootstrapResult {
  double mean = 0.0;
  Interval ci;
  int block = 10;
  int iterations = 10000;
  std::uint64_t seed = 0;
  std::size_t blocks = 0;
};

// Linear-interpolated sample quantile of sorted data.
[[nodiscard]] inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

[[nodiscard]] inline BlockBootstrapResult spatial_block_bootstrap(const DeltaField& field, int block = 10,
                                                                  int iterations = 10000,
                                                                  std::uint64_t seed = 0) {
  if (block < 1 || iterations < 1) throw DomainError("bootstrap needs positive block size and iterations");
  const std::size_t cells = static_cast<std::size_t>(field.width) * static_cast<std::size_t>(field.height);
  if (field.delta.size() != cells || field.mask.size() != cells) throw DomainError("delta field size mismatch");

  struct Block {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::vector<Block> blocks;
  double total = 0.0;
  std::size_t total_count = 0;
  for (int bj = 0; bj < field.height; bj += block) {
    for (int bi = 0; bi < field.width; bi += block) {
      Block b;
      for (int j = bj; j < std::min(field.height, bj + block); ++j) {
        for (int i = bi; i < std::min(field.width, bi + block); ++i) {
          const std::size_t k = static_cast<std::size_t>(j) * static_cast<std::size_t>(field.width) +
                                static_cast<std::size_t>(i);
          if (!field.mask[k]) continue;
          b.sum += field.delta[k];
          ++b.count;
        }
      }
      if (b.count == 0) continue;
      total += b.sum;
      total_count += b.count;
      blocks.push_back(b);
    }
  }
  if (blocks.empty()) throw EmptyEvalSetError("no block contains an evaluation cell");

  std::vector<double> stats(static_cast<std::size_t>(iterations));
  for (int it = 0; it < iterations; ++it) {
    Rng rng = make_rng(seed, "block-bootstrap", static_cast<std::uint64_t>(it));
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const Block& b = blocks[uniform_index(rng, blocks.size())];
      s += b.sum;
      c += b.count;
    }
    stats[static_cast<std::size_t>(it)] = s / static_cast<double>(c);
  }
  std::sort(stats.begin(), stats.end());
  BlockBootstrapResult r;
  r.mean = total / static_cast<double>(total_count);
  r.ci = {quantile_sorted(stats, 0.025), quantile_sorted(stats, 0.975)};
  r.block = block;
  r.iterations = iterations;
  r.seed = seed;
  r.blocks = blocks.size();
  return r;
}

// ---------------------------------------------------------------------------
// Bayes factors

// Point null mu = 0 against mu ~ N(0, prior_scale^2), both on the sample mean
// with the sample variance plugged in.
[[nodiscard]] inline double bayes_factor_01(const PairedSample& sample, double prior_scale) {
  if (sample.n() < 2) throw DomainError("Bayes factor needs at least two pairs");
  const double sd = stddev(sample.diffs);
  if (sd == 0.0) throw DegenerateVarianceError("Bayes factor is undefined for zero-variance differences");
  const double m = mean(sample.diffs);
  const double v0 = sd * sd / static_cast<double>(sample.n());
  const double v1 = v0 + prior_scale * prior_scale;
  const double log_bf = 0.5 * std::log(v1 / v0) - 0.5 * m * m / v0 + 0.5 * m * m / v1;
  return std::exp(log_bf);
}

// Posterior-to-prior odds that |mu| < margin, under mu ~ N(0, prior_scale^2)
// and the same plug-in normal likelihood. Infinite when the posterior mass
// outside the region underflows.
[[nodiscard]] inline double bayes_factor_interval(const PairedSample& sample, double margin, double prior_scale) {
  if (sample.n() < 2) throw DomainError("Bayes factor needs at least two pairs");
  const double sd = stddev(sample.diffs);
  if (sd == 0.0) throw DegenerateVarianceError("Bayes factor is undefined for zero-variance differences");
  const double m = mean(sample.diffs);
  const double v0 = sd * sd / static_cast<double>(sample.n());
  const double t2 = prior_scale * prior_scale;
  const double post_var = 1.0 / (1.0 / v0 + 1.0 / t2);
  const double post_mean = post_var * m / v0;
  const double ps = std::sqrt(post_var);
  auto upper_tail = [](double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); };
  const double a = std::abs(post_mean);
  const double out_post = upper_tail((margin - a) / ps) + upper_tail((margin + a) / ps);
  // Beyond the margin, take the inside mass as a difference of lower tails.
  const double in_post = a > margin ? upper_tail((a - margin) / ps) - upper_tail((a + margin) / ps) : 1.0 - out_post;
  const double out_prior = 2.0 * upper_tail(margin / prior_scale);
  const double in_prior = 1.0 - out_prior;
  if (out_post == 0.0) return std::numeric_limits<double>::infinity();
  return (in_post / out_post) / (in_prior / out_prior);
}

}  // namespace gridfuse::stats
