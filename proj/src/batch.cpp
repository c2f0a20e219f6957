#include "comfort/batch.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "comfort/csv.hpp"
#include "comfort/error.hpp"

namespace comfort {

std::size_t BatchResult::succeeded() const {
  std::size_t n = 0;
  for (const auto& r : results) n += r.has_value() ? 1 : 0;
  return n;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers < 1) throw ValidationError("worker count must be >= 1");
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

BatchResult batch_simulate(const std::vector<GeneratedDwelling>& dwellings,
                           const std::map<int, WeatherSeries>& weather_by_zone, std::size_t workers,
                           const SimulationOptions& opts) {
  if (workers < 1) throw ValidationError("worker count must be >= 1");
  validate(opts);
  const auto t0 = std::chrono::steady_clock::now();
  BatchResult out;
  out.workers = workers;
  const std::size_t n = dwellings.size();
  out.results.resize(n);
  std::vector<std::optional<BatchFailure>> failed(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto& d = dwellings[i];
    try {
      const auto it = weather_by_zone.find(d.model.climate_zone);
      if (it == weather_by_zone.end()) {
        throw ValidationError("no weather series for climate zone " + std::to_string(d.model.climate_zone));
      }
      out.results[i] = simulate(d.model, d.schedules, it->second, opts);
    } catch (const SimulationError& e) {
      failed[i] = BatchFailure{d.model.dwelling_id, e.step_index, e.what()};
    } catch (const std::exception& e) {
      failed[i] = BatchFailure{d.model.dwelling_id, -1, e.what()};
    }
  });
  for (auto& f : failed) {
    if (f) out.failures.push_back(std::move(*f));
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string serialize_failures(const std::vector<BatchFailure>& failures) {
  std::string out = "dwelling_id,step_index,message\n";
  for (const auto& f : failures) {
    out += csv::join_line({f.dwelling_id, std::to_string(f.step_index), f.message});
    out += '\n';
  }
  return out;
}

}  // namespace comfort
