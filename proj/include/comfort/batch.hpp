#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "comfort/building.hpp"
#include "comfort/thermal.hpp"
#include "comfort/weather.hpp"

namespace comfort {

struct BatchFailure {
  std::string dwelling_id;
  long step_index = -1;  // -1 when the failure is not tied to a step
  std::string message;
};

struct BatchResult {
  std::vector<std::optional<SimulationResult>> results;  // input order
  std::vector<BatchFailure> failures;                    // input order
  double wall_seconds = 0;
  std::size_t workers = 1;

  std::size_t succeeded() const;
};

/// Runs `fn(i)` for i in [0, n) on `workers` threads. Work items are claimed
/// in index order; callers write results by index so the output never depends
/// on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Simulates every dwelling against the weather series of its climate zone.
/// A failing dwelling is recorded and the batch continues.
BatchResult batch_simulate(const std::vector<GeneratedDwelling>& dwellings,
                           const std::map<int, WeatherSeries>& weather_by_zone, std::size_t workers,
                           const SimulationOptions& opts = {});

std::string serialize_failures(const std::vector<BatchFailure>& failures);

}  // namespace comfort
