#pragma once

// Cell-state algebra for the two fusion families on the binary frame {O, F}:
// additive log-odds with clamping, and belief-function masses combined with
// Dempster's or Yager's rule. Also the probability transforms that connect
// the two and the closed-form accumulation trajectories used as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "gridfuse/error.hpp"

namespace gridfuse {

// Mass triplet (m({O}), m({F}), m(Θ)).
struct BBA {
  double m_o = 0.0;
  double m_f = 0.0;
  double m_of = 1.0;

  [[nodiscard]] static constexpr BBA vacuous() { return {0.0, 0.0, 1.0}; }

  [[nodiscard]] double sum() const { return m_o + m_f + m_of; }
  [[nodiscard]] bool consonant() const { return m_o * m_f == 0.0; }
  [[nodiscard]] bool valid(double tol = 1e-9) const {
    return m_o >= 0.0 && m_f >= 0.0 && m_of >= 0.0 && std::abs(sum() - 1.0) <= tol;
  }
  // Belief and plausibility of {O}.
  [[nodiscard]] double bel_o() const { return m_o; }
  [[nodiscard]] double pl_o() const { return m_o + m_of; }
  [[nodiscard]] double pl_f() const { return m_f + m_of; }

  friend bool operator==(const BBA&, const BBA&) = default;
};

// Symmetric clamp bound for accumulated log-odds. `unbounded()` disables the
// clamp exactly instead of approximating it with a large number.
class LogOddsLimit {
 public:
  constexpr LogOddsLimit() = default;
  constexpr explicit LogOddsLimit(double bound) : bound_(bound) {}

  [[nodiscard]] static constexpr LogOddsLimit unbounded() {
    return LogOddsLimit(std::numeric_limits<double>::infinity());
  }

  [[nodiscard]] constexpr bool finite() const {
    return bound_ < std::numeric_limits<double>::infinity();
  }
  [[nodiscard]] constexpr double bound() const { return bound_; }
  [[nodiscard]] double apply(double l) const {
    return finite() ? std::clamp(l, -bound_, bound_) : l;
  }
  [[nodiscard]] std::string str() const {
    if (!finite()) return "inf";
    std::string s = std::to_string(bound_);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  friend constexpr bool operator==(const LogOddsLimit&, const LogOddsLimit&) = default;

 private:
  double bound_ = 10.0;
};

struct LogOddsCell {
  double L = 0.0;
  std::uint32_t n = 0;

  friend bool operator==(const LogOddsCell&, const LogOddsCell&) = default;
};

enum class FusionRule { Bayesian, BayesianCount, Dempster, Yager };
enum class Matching { BetP, PPl };

[[nodiscard]] inline bool is_belief_rule(FusionRule r) {
  return r == FusionRule::Dempster || r == FusionRule::Yager;
}

[[nodiscard]] inline std::string_view to_string(FusionRule r) {
  switch (r) {
    case FusionRule::Bayesian: return "bayesian";
    case FusionRule::BayesianCount: return "bayesian-count";
    case FusionRule::Dempster: return "dempster";
    case FusionRule::Yager: return "yager";
  }
  return "?";
}

[[nodiscard]] inline std::string_view to_string(Matching m) {
  return m == Matching::BetP ? "betp" : "ppl";
}

[[nodiscard]] inline std::optional<FusionRule> parse_rule(std::string_view s) {
  if (s == "bayesian") return FusionRule::Bayesian;
  if (s == "bayesian-count") return FusionRule::BayesianCount;
  if (s == "dempster") return FusionRule::Dempster;
  if (s == "yager") return FusionRule::Yager;
  return std::nullopt;
}

[[nodiscard]] inline std::optional<Matching> parse_matching(std::string_view s) {
  if (s == "betp") return Matching::BetP;
  if (s == "ppl") return Matching::PPl;
  return std::nullopt;
}

struct FusionParams {
  double l_occ = 2.0;
  double l_free = -0.5;
  LogOddsLimit l_max{10.0};
  double mof_floor = 0.0;  // 0 disables the floor
  FusionRule rule = FusionRule::Bayesian;
  Matching matching = Matching::BetP;
};

struct ConflictMass {
  double K = 0.0;
};

// ---------------------------------------------------------------------------
// Log-odds arithmetic

[[nodiscard]] inline double logistic(double l) {
  // Split by sign so the exponential never overflows.
  if (l >= 0.0) return 1.0 / (1.0 + std::exp(-l));
  const double e = std::exp(l);
  return e / (1.0 + e);
}

[[nodiscard]] inline double logit(double p) { return std::log(p / (1.0 - p)); }

[[nodiscard]] inline LogOddsCell bayes_update(LogOddsCell cell, double l_obs, LogOddsLimit l_max) {
  return {l_max.apply(cell.L + l_obs), cell.n + 1};
}

// Log-odds after N identical increments from L = 0.
[[nodiscard]] inline double bayes_trajectory(double l_occ, LogOddsLimit l_max, int N) {
  return l_max.apply(N * l_occ);
}

// ---------------------------------------------------------------------------
// Probability transforms

[[nodiscard]] inline double betp(const BBA& m) { return m.m_o + 0.5 * m.m_of; }

// Normalized plausibility Pl(O) / (Pl(O) + Pl(F)).
[[nodiscard]] inline double ppl(const BBA& m) {
  return (m.m_o + m.m_of) / (m.m_o + m.m_f + 2.0 * m.m_of);
}

// Unique consonant BBA with BetP(O) = σ(l).
[[nodiscard]] inline BBA masses_from_logodds_betp(double l) {
  // For l >= 0, 1 - p = σ(-l) keeps full precision in m_OF when p is near 1.
  if (l >= 0.0) {
    const double q = logistic(-l);  // 1 - p
    return {1.0 - 2.0 * q, 0.0, 2.0 * q};
  }
  const double p = logistic(l);
  return {0.0, 1.0 - 2.0 * p, 2.0 * p};
}

// Consonant BBA whose normalized plausibility equals σ(l).
[[nodiscard]] inline BBA masses_from_logodds_ppl(double l) {
  if (!std::isfinite(l)) throw DomainError("P_Pl matching requires finite log-odds");
  const double p = logistic(l);
  if (!(p > 0.0 && p < 1.0)) throw DomainError("P_Pl matching requires 0 < p < 1");
  if (l >= 0.0) {
    // m_OF = 1/p - 1 = e^{-l}
    const double m_of = std::exp(-l);
    return {1.0 - m_of, 0.0, m_of};
  }
  const double m_of = std::exp(l);
  return {0.0, 1.0 - m_of, m_of};
}

[[nodiscard]] inline BBA matched_masses(double l, Matching matching) {
  return matching == Matching::BetP ? masses_from_logodds_betp(l) : masses_from_logodds_ppl(l);
}

// Inverse of masses_from_logodds_betp on consonant BBAs with m_OF > 0.
[[nodiscard]] inline double logodds_from_masses(const BBA& m) {
  const double p = betp(m);
  if (!(p > 0.0 && p < 1.0)) {
    throw DegenerateBbaError("BetP(O) is 0 or 1; log-odds is unbounded");
  }
  // Work from the smaller of p and 1-p to keep precision near the ends.
  if (m.m_f == 0.0 && m.m_o > 0.0) {
    const double q = 0.5 * m.m_of;  // 1 - p
    return std::log((1.0 - q) / q);
  }
  if (m.m_o == 0.0 && m.m_f > 0.0) {
    const double pp = 0.5 * m.m_of;
    return std::log(pp / (1.0 - pp));
  }
  return std::log(p / (1.0 - p));
}

// ---------------------------------------------------------------------------
// Combination rules

namespace detail {
inline constexpr double kRenormDrift = 1e-12;
inline constexpr double kTotalConflict = 1.0 - 1e-12;

inline BBA renormalize(BBA m) {
  const double s = m.sum();
  if (std::abs(s - 1.0) > kRenormDrift && s > 0.0) {
    m.m_o /= s;
    m.m_f /= s;
    m.m_of /= s;
  }
  return m;
}
}  // namespace detail

[[nodiscard]] inline double conflict(const BBA& a, const BBA& b) {
  return a.m_o * b.m_f + a.m_f * b.m_o;
}

struct DempsterResult {
  BBA m;
  ConflictMass conflict;
};

// Normalized conjunctive combination. Throws TotalConflictError when K ≈ 1.
[[nodiscard]] inline DempsterResult dempster_combine(const BBA& a, const BBA& b) {
  const double K = conflict(a, b);
  if (K >= detail::kTotalConflict) {
    throw TotalConflictError("Dempster combination of totally conflicting BBAs");
  }
  const double norm = 1.0 - K;
  BBA out{(a.m_o * b.m_o + a.m_o * b.m_of + a.m_of * b.m_o) / norm,
          (a.m_f * b.m_f + a.m_f * b.m_of + a.m_of * b.m_f) / norm,
          (a.m_of * b.m_of) / norm};
  return {detail::renormalize(out), {K}};
}

// Unnormalized conjunctive combination with the conflict moved to Θ.
// Commutative, not associative.
[[nodiscard]] inline BBA yager_combine(const BBA& a, const BBA& b) {
  const double K = conflict(a, b);
  BBA out{a.m_o * b.m_o + a.m_o * b.m_of + a.m_of * b.m_o,
          a.m_f * b.m_f + a.m_f * b.m_of + a.m_of * b.m_f, a.m_of * b.m_of + K};
  return detail::renormalize(out);
}

// Enforce m_OF >= floor by rescaling the committed masses.
[[nodiscard]] inline BBA apply_mof_floor(const BBA& m, double floor) {
  if (floor <= 0.0 || m.m_of >= floor) return m;
  const double committed = m.m_o + m.m_f;
  const double scale = (1.0 - floor) / committed;
  return {m.m_o * scale, m.m_f * scale, floor};
}

// N-fold Dempster accumulation of (a, 0, 1-a) from the vacuous prior.
[[nodiscard]] inline BBA closed_form_consonant(double a, int N) {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("closed-form accumulation requires 0 < a < 1");
  const double rest = std::pow(1.0 - a, N);
  return {1.0 - rest, 0.0, rest};
}

}  // namespace gridfuse
