#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gridfuse/fusion.hpp"
#include "gridfuse/grid.hpp"
#include "gridfuse/sensor.hpp"

namespace gridfuse {

struct ArmSpec {
  std::string name;
  FusionParams params;
};

// One fusion arm's map: the cell state for its rule plus the per-cell count
// of integrated observations.
class ArmGrid {
 public:
  ArmGrid(const GridSpec& spec, const FusionParams& params)
      : params_(params), counts_(spec.cell_count(), 0) {
    if (is_belief_rule(params.rule)) {
      state_ = OccupancyGrid<BBA>(spec, BBA::vacuous());
    } else {
      state_ = OccupancyGrid<LogOddsCell>(spec, LogOddsCell{});
    }
  }

  [[nodiscard]] const FusionParams& params() const { return params_; }
  [[nodiscard]] const GridSpec& spec() const {
    return std::visit([](const auto& g) -> const GridSpec& { return g.spec(); }, state_);
  }
  [[nodiscard]] bool is_belief() const { return std::holds_alternative<OccupancyGrid<BBA>>(state_); }
  [[nodiscard]] const OccupancyGrid<BBA>& belief() const { return std::get<OccupancyGrid<BBA>>(state_); }
  [[nodiscard]] const OccupancyGrid<LogOddsCell>& logodds() const {
    return std::get<OccupancyGrid<LogOddsCell>>(state_);
  }
  [[nodiscard]] const std::vector<std::uint32_t>& counts() const { return counts_; }

  void integrate(const ScanObservation& obs) {
    const std::size_t k = spec().linear(obs.cell);
    ++counts_[k];
    if (auto* g = std::get_if<OccupancyGrid<LogOddsCell>>(&state_)) {
      LogOddsCell& c = g->at_linear(k);
      c = bayes_update(c, obs.l, params_.l_max);
    } else {
      BBA& m = std::get<OccupancyGrid<BBA>>(state_).at_linear(k);
      m = combine(m, obs.bba);
    }
  }

  void integrate(std::span<const ScanObservation> batch) {
    for (const auto& o : batch) integrate(o);
  }

  // Cell-wise fusion of another arm's map built with the same rule.
  void fuse(const ArmGrid& other) {
    if (other.params_.rule != params_.rule || !(other.spec() == spec())) {
      throw Error("fuse: arms must share rule and grid geometry");
    }
    for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
    if (auto* g = std::get_if<OccupancyGrid<LogOddsCell>>(&state_)) {
      const auto& o = other.logodds();
      for (std::size_t k = 0; k < g->size(); ++k) {
        LogOddsCell& c = g->at_linear(k);
        const LogOddsCell& d = o.at_linear(k);
        c = {params_.l_max.apply(c.L + d.L), c.n + d.n};
      }
    } else {
      auto& g2 = std::get<OccupancyGrid<BBA>>(state_);
      const auto& o = other.belief();
      for (std::size_t k = 0; k < g2.size(); ++k) g2.at_linear(k) = combine(g2.at_linear(k), o.at_linear(k));
    }
  }

  // Decision probability: σ(L) for log-odds arms, BetP(O) for belief arms.
  [[nodiscard]] double probability(std::size_t k) const {
    if (const auto* g = std::get_if<OccupancyGrid<LogOddsCell>>(&state_)) return logistic(g->at_linear(k).L);
    return betp(std::get<OccupancyGrid<BBA>>(state_).at_linear(k));
  }

  [[nodiscard]] ProbabilityGrid probability_grid() const {
    ProbabilityGrid out(spec(), 0.5);
    for (std::size_t k = 0; k < out.size(); ++k) out.at_linear(k) = probability(k);
    return out;
  }

 private:
  [[nodiscard]] BBA combine(const BBA& cell, const BBA& obs) const {
    BBA m = params_.rule == FusionRule::Yager ? yager_combine(cell, obs) : dempster_combine(cell, obs).m;
    return apply_mof_floor(m, params_.mof_floor);
  }

  FusionParams params_;
  std::variant<OccupancyGrid<LogOddsCell>, OccupancyGrid<BBA>> state_;
  std::vector<std::uint32_t> counts_;
};

}  // namespace gridfuse
