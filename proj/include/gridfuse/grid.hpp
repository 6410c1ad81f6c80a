#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gridfuse {

struct CellIndex {
  int i = 0;  // column (x)
  int j = 0;  // row (y)

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Cell (i, j) covers [origin_x + i*res, origin_x + (i+1)*res) and likewise in y.
struct GridSpec {
  int width_cells = 1;
  int height_cells = 1;
  double resolution = 0.1;
  double origin_x = 0.0;
  double origin_y = 0.0;

  GridSpec() = default;
  GridSpec(int width, int height, double res, double ox = 0.0, double oy = 0.0)
      : width_cells(width), height_cells(height), resolution(res), origin_x(ox), origin_y(oy) {
    if (width < 1 || height < 1) throw std::invalid_argument("grid dimensions must be >= 1");
    if (!(res > 0.0)) throw std::invalid_argument("grid resolution must be positive");
  }

  [[nodiscard]] std::size_t cell_count() const {
    return static_cast<std::size_t>(width_cells) * static_cast<std::size_t>(height_cells);
  }
  [[nodiscard]] bool contains(CellIndex c) const {
    return c.i >= 0 && c.j >= 0 && c.i < width_cells && c.j < height_cells;
  }
  [[nodiscard]] std::size_t linear(CellIndex c) const {
    return static_cast<std::size_t>(c.j) * static_cast<std::size_t>(width_cells) +
           static_cast<std::size_t>(c.i);
  }
  [[nodiscard]] CellIndex unlinear(std::size_t k) const {
    return {static_cast<int>(k % static_cast<std::size_t>(width_cells)),
            static_cast<int>(k / static_cast<std::size_t>(width_cells))};
  }
  [[nodiscard]] double width_m() const { return width_cells * resolution; }
  [[nodiscard]] double height_m() const { return height_cells * resolution; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Absent when (x, y) lies outside the grid.
[[nodiscard]] inline std::optional<CellIndex> world_to_cell(const GridSpec& spec, double x,
                                                            double y) {
  const double fx = std::floor((x - spec.origin_x) / spec.resolution);
  const double fy = std::floor((y - spec.origin_y) / spec.resolution);
  if (!(fx >= 0.0 && fy >= 0.0 && fx < spec.width_cells && fy < spec.height_cells)) {
    return std::nullopt;
  }
  return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

[[nodiscard]] inline Point2 cell_center(const GridSpec& spec, CellIndex c) {
  return {spec.origin_x + (c.i + 0.5) * spec.resolution,
          spec.origin_y + (c.j + 0.5) * spec.resolution};
}

// Dense row-major grid of per-cell state.
template <typename Cell>
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(const GridSpec& spec, Cell init = Cell{})
      : spec_(spec), cells_(spec.cell_count(), init) {}

  [[nodiscard]] const GridSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t size() const { return cells_.size(); }

  Cell& operator[](CellIndex c) { return cells_[spec_.linear(c)]; }
  const Cell& operator[](CellIndex c) const { return cells_[spec_.linear(c)]; }
  Cell& at_linear(std::size_t k) { return cells_[k]; }
  const Cell& at_linear(std::size_t k) const { return cells_[k]; }

  [[nodiscard]] std::vector<Cell>& cells() { return cells_; }
  [[nodiscard]] const std::vector<Cell>& cells() const { return cells_; }

  auto begin() { return cells_.begin(); }
  auto end() { return cells_.end(); }
  auto begin() const { return cells_.begin(); }
  auto end() const { return cells_.end(); }

 private:
  GridSpec spec_{};
  std::vector<Cell> cells_;
};

using ProbabilityGrid = OccupancyGrid<double>;

// Result lies in (-pi, pi].
[[nodiscard]] inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Rigid-body composition a ⊕ b: b expressed in a's frame.
[[nodiscard]] inline Pose2D compose_pose(const Pose2D& a, const Pose2D& b) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, normalize_angle(a.theta + b.theta)};
}

// Inverse so that compose_pose(a, inverse_pose(a)) is the identity.
[[nodiscard]] inline Pose2D inverse_pose(const Pose2D& a) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {-c * a.x - s * a.y, s * a.x - c * a.y, normalize_angle(-a.theta)};
}

// Relative transform taking `from` to `to`: from ⊕ result = to.
[[nodiscard]] inline Pose2D relative_pose(const Pose2D& from, const Pose2D& to) {
  return compose_pose(inverse_pose(from), to);
}

}  // namespace gridfuse
