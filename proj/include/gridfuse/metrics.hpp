#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "gridfuse/error.hpp"
#include "gridfuse/grid.hpp"
#include "gridfuse/sensor.hpp"

namespace gridfuse {

// Evaluation cells (linear indices, ascending) with their binary labels.
struct EvalSet {
  GridSpec spec;
  std::vector<std::size_t> eval_cells;
  std::vector<std::uint8_t> labels;  // aligned with eval_cells
  std::vector<std::size_t> boundary_cells;
};

inline constexpr int kMinEvalObservations = 3;

namespace detail {

// label: -1 unknown, 0 free, 1 occupied.
inline EvalSet finish_eval_set(const GridSpec& spec, const std::vector<std::int8_t>& label,
                               const std::vector<bool>& eligible) {
  EvalSet ev;
  ev.spec = spec;
  for (std::size_t k = 0; k < label.size(); ++k) {
    if (!eligible[k] || label[k] < 0) continue;
    ev.eval_cells.push_back(k);
    ev.labels.push_back(static_cast<std::uint8_t>(label[k]));
  }
  if (ev.eval_cells.empty()) throw EmptyEvalSetError("no cell has enough observations to evaluate");
  for (std::size_t e = 0; e < ev.eval_cells.size(); ++e) {
    const CellIndex c = spec.unlinear(ev.eval_cells[e]);
    const CellIndex nbrs[] = {{c.i - 1, c.j}, {c.i + 1, c.j}, {c.i, c.j - 1}, {c.i, c.j + 1}};
    for (const CellIndex nb : nbrs) {
      if (!spec.contains(nb)) continue;
      const std::int8_t l = label[spec.linear(nb)];
      if (l >= 0 && l != static_cast<std::int8_t>(ev.labels[e])) {
        ev.boundary_cells.push_back(ev.eval_cells[e]);
        break;
      }
    }
  }
  return ev;
}

}  // namespace detail

// Labels by majority vote of the observation kinds; ties are excluded.
[[nodiscard]] inline EvalSet build_eval_set(std::span<const ScanObservation> observations, const GridSpec& spec,
                                            int min_observations = kMinEvalObservations) {
  std::vector<std::uint32_t> occ(spec.cell_count(), 0);
  std::vector<std::uint32_t> total(spec.cell_count(), 0);
  for (const auto& o : observations) {
    const std::size_t k = spec.linear(o.cell);
    ++total[k];
    if (o.kind == ObservationKind::Occupied) ++occ[k];
  }
  std::vector<std::int8_t> label(spec.cell_count(), -1);
  std::vector<bool> eligible(spec.cell_count(), false);
  for (std::size_t k = 0; k < total.size(); ++k) {
    if (total[k] == 0 || 2 * occ[k] == total[k]) continue;
    label[k] = 2 * occ[k] > total[k] ? 1 : 0;
    eligible[k] = total[k] >= static_cast<std::uint32_t>(min_observations);
  }
  return detail::finish_eval_set(spec, label, eligible);
}

// Cells observed at least `min_observations` times, labelled from a raster.
[[nodiscard]] inline EvalSet build_eval_set(std::span<const std::uint32_t> counts,
                                            const OccupancyGrid<std::uint8_t>& truth,
                                            int min_observations = kMinEvalObservations) {
  const GridSpec& spec = truth.spec();
  if (counts.size() != spec.cell_count()) throw Error("observation counts do not match the grid");
  std::vector<std::int8_t> label(spec.cell_count());
  std::vector<bool> eligible(spec.cell_count());
  for (std::size_t k = 0; k < label.size(); ++k) {
    label[k] = truth.at_linear(k) ? 1 : 0;
    eligible[k] = counts[k] >= static_cast<std::uint32_t>(min_observations);
  }
  return detail::finish_eval_set(spec, label, eligible);
}

[[nodiscard]] inline double cell_accuracy(const ProbabilityGrid& probs, const EvalSet& ev) {
  std::size_t hits = 0;
  for (std::size_t e = 0; e < ev.eval_cells.size(); ++e) {
    const bool predicted = probs.at_linear(ev.eval_cells[e]) > 0.5;
    hits += predicted == (ev.labels[e] == 1);
  }
  return static_cast<double>(hits) / static_cast<double>(ev.eval_cells.size());
}

// Gradient magnitude of p at cell k in probability per cell.
[[nodiscard]] inline double gradient_magnitude(const ProbabilityGrid& probs, std::size_t k) {
  const GridSpec& s = probs.spec();
  const CellIndex c = s.unlinear(k);
  auto p = [&](int i, int j) { return probs[{i, j}]; };
  auto diff = [&](int lo_i, int lo_j, int hi_i, int hi_j, double span) {
    return (p(hi_i, hi_j) - p(lo_i, lo_j)) / span;
  };
  double gx = 0.0;
  if (s.width_cells > 1) {
    const int lo = std::max(0, c.i - 1);
    const int hi = std::min(s.width_cells - 1, c.i + 1);
    gx = diff(lo, c.j, hi, c.j, hi - lo);
  }
  double gy = 0.0;
  if (s.height_cells > 1) {
    const int lo = std::max(0, c.j - 1);
    const int hi = std::min(s.height_cells - 1, c.j + 1);
    gy = diff(c.i, lo, c.i, hi, hi - lo);
  }
  return std::hypot(gx, gy);
}

[[nodiscard]] inline double boundary_sharpness(const ProbabilityGrid& probs, const EvalSet& ev) {
  if (ev.boundary_cells.empty()) throw EmptyEvalSetError("no boundary cells in the evaluation set");
  double sum = 0.0;
  for (std::size_t k : ev.boundary_cells) sum += gradient_magnitude(probs, k);
  return sum / static_cast<double>(ev.boundary_cells.size());
}

[[nodiscard]] inline double brier(const ProbabilityGrid& probs, const EvalSet& ev) {
  double sum = 0.0;
  for (std::size_t e = 0; e < ev.eval_cells.size(); ++e) {
    const double d = probs.at_linear(ev.eval_cells[e]) - ev.labels[e];
    sum += d * d;
  }
  return sum / static_cast<double>(ev.eval_cells.size());
}

[[nodiscard]] inline double binary_entropy_bits(double p) {
  p = std::clamp(p, 1e-9, 1.0 - 1e-9);
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

[[nodiscard]] inline double map_entropy(const ProbabilityGrid& probs, const EvalSet& ev) {
  double sum = 0.0;
  for (std::size_t k : ev.eval_cells) sum += binary_entropy_bits(probs.at_linear(k));
  return sum / static_cast<double>(ev.eval_cells.size());
}

struct MetricsReport {
  double cell_accuracy = 0.0;
  double boundary_sharpness = 0.0;
  double brier = 0.0;
  double entropy = 0.0;
  std::size_t eval_cells = 0;
  std::size_t boundary_cells = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

[[nodiscard]] inline MetricsReport evaluate(const ProbabilityGrid& probs, const EvalSet& ev) {
  if (!(probs.spec() == ev.spec)) throw Error("probability grid and evaluation set disagree on geometry");
  return {cell_accuracy(probs, ev), boundary_sharpness(probs, ev), brier(probs, ev), map_entropy(probs, ev),
          ev.eval_cells.size(), ev.boundary_cells.size()};
}

enum class Polarity { HigherIsBetter, LowerIsBetter };

enum class Metric { CellAccuracy, BoundarySharpness, Brier, Entropy };

struct MetricInfo {
  Metric metric;
  std::string_view name;
  Polarity polarity;
};

inline constexpr std::array<MetricInfo, 4> kMetrics{{
    {Metric::CellAccuracy, "cell_accuracy", Polarity::HigherIsBetter},
    {Metric::BoundarySharpness, "boundary_sharpness", Polarity::HigherIsBetter},
    {Metric::Brier, "brier", Polarity::LowerIsBetter},
    {Metric::Entropy, "entropy", Polarity::LowerIsBetter},
}};

[[nodiscard]] inline double metric_value(const MetricsReport& r, Metric m) {
  switch (m) {
    case Metric::CellAccuracy: return r.cell_accuracy;
    case Metric::BoundarySharpness: return r.boundary_sharpness;
    case Metric::Brier: return r.brier;
    case Metric::Entropy: return r.entropy;
  }
  return 0.0;
}

[[nodiscard]] inline std::string csv_header() {
  return "run_id,seed,arm,cell_accuracy,boundary_sharpness,brier,entropy,eval_cells,boundary_cells";
}

[[nodiscard]] inline std::string csv_row(std::string_view run_id, std::uint64_t seed, std::string_view arm,
                                         const MetricsReport& r) {
  return fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{}", run_id, seed, arm, r.cell_accuracy,
                     r.boundary_sharpness, r.brier, r.entropy, r.eval_cells, r.boundary_cells);
}

}  // namespace gridfuse
