#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comfort/comfort_label.hpp"
#include "comfort/survey.hpp"
#include "comfort/thermal.hpp"

namespace comfort {

inline constexpr int kClassCount = 3;  // Comfort, Discomfort, Unknown

/// Row-major feature matrix with one row per (dwelling, step).
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<float> x;
  std::vector<int> y;
  std::vector<std::string> dwellings;  // distinct ids, first-seen order
  std::vector<std::uint32_t> dwelling;  // per row, index into dwellings
  std::vector<std::uint32_t> step;      // per row, grid index

  std::size_t rows() const { return y.size(); }
  std::size_t features() const { return feature_names.size(); }
  const float* row(std::size_t i) const { return x.data() + i * features(); }
  float at(std::size_t i, std::size_t f) const { return x[i * features() + f]; }
  std::size_t feature_index(const std::string& name) const;
};

/// Feature names in column order: per room slot radiant, air and heater flux,
/// then presence operative temperature, outdoor temperature, household age,
/// gender ratio and presence indicator.
std::vector<std::string> dataset_feature_names();

struct DwellingInputs {
  const SimulationResult* sim = nullptr;
  const LabelFile* labels = nullptr;
  const SurveyRecord* survey = nullptr;
};

/// Rows ordered by input order then step. Missing room slots read 0; the
/// presence operative temperature falls back to the plain room mean when
/// nobody is home.
Dataset assemble_dataset(const std::vector<DwellingInputs>& inputs);

Dataset subset(const Dataset& d, const std::vector<std::size_t>& rows);
std::string dataset_digest(const Dataset& d);

enum class SplitMode { ByStep, ByDwelling };
std::string_view to_string(SplitMode m);
SplitMode parse_split_mode(std::string_view s);

struct SplitSpec {
  double train = 0.6, val = 0.2, test = 0.2;
  SplitMode mode = SplitMode::ByStep;
  std::uint64_t seed = 1;
};
void validate(const SplitSpec& s);

struct Split {
  std::vector<std::size_t> train, val, test;  // row indices, ascending
};

/// by_step shuffles rows; by_dwelling shuffles dwellings within two strata
/// (with / without any Discomfort label) and keeps each dwelling whole.
Split split_dataset(const Dataset& d, const SplitSpec& spec);

}  // namespace comfort
