#pragma once

#include <vector>

#include "comfort/equipment.hpp"

namespace comfort {

inline constexpr double kMaxCellThickness = 0.05;  // m

/// One-dimensional conduction chain. Cell 0 is on side B (far side), the last
/// cell on side A (room side).
struct WallAssembly {
  double area = 0;
  std::vector<double> thickness;     // m, per cell
  std::vector<double> capacity;      // J/K, per cell
  std::vector<double> resistance;    // K/W, per cell (centre to centre of a cell's own faces)
  std::vector<double> conductance;   // W/K, between cell i and i+1 (size n-1)
  std::vector<std::size_t> layer_of; // source layer index per cell

  std::size_t size() const { return capacity.size(); }
  /// Sum of cell resistances, face to face.
  double total_resistance() const;
  double total_capacity() const;
};

/// Splits each layer into ceil(thickness / 5 cm) equal cells.
WallAssembly discretize_wall(const std::vector<MaterialLayer>& layers, double area);

}  // namespace comfort
