#include "comfort/wall.hpp"

#include <cmath>
#include <numeric>

#include "comfort/error.hpp"

namespace comfort {

double WallAssembly::total_resistance() const { return std::accumulate(resistance.begin(), resistance.end(), 0.0); }

double WallAssembly::total_capacity() const { return std::accumulate(capacity.begin(), capacity.end(), 0.0); }

WallAssembly discretize_wall(const std::vector<MaterialLayer>& layers, double area) {
  if (layers.empty()) throw ValidationError("discretize_wall: no layers");
  if (!(area > 0) || !std::isfinite(area)) throw ValidationError("discretize_wall: area must be > 0");
  WallAssembly w;
  w.area = area;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    validate(l);
    // Small tolerance so that e.g. 0.10 m stays at 2 cells despite rounding.
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(l.thickness / kMaxCellThickness - 1e-9)));
    const double dx = l.thickness / static_cast<double>(n);
    for (std::size_t c = 0; c < n; ++c) {
      w.thickness.push_back(dx);
      w.capacity.push_back(l.density * l.specific_heat * dx * area);
      w.resistance.push_back(dx / (l.conductivity * area));
      w.layer_of.push_back(li);
    }
  }
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    w.conductance.push_back(1.0 / (0.5 * w.resistance[i] + 0.5 * w.resistance[i + 1]));
  }
  return w;
}

}  // namespace comfort
