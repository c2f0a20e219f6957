#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comfort/dataset.hpp"
#include "comfort/forest.hpp"

namespace comfort {

/// Past-label window appended to the current features: lag_1 is the label of
/// the previous step, lag_W the oldest.
struct MultihorizonParams {
  std::size_t window = 48;
  ForestParams forest;
};

struct MultihorizonModel {
  std::size_t window = 0;
  std::size_t base_features = 0;
  RandomForest forest;
};

enum class HorizonMode { TeacherForced, Recursive };
std::string_view to_string(HorizonMode m);

/// Contiguous per-dwelling row ranges [first, last). Throws when a dwelling's
/// rows are interleaved with another's or its steps are not consecutive.
struct Sequence {
  std::uint32_t dwelling = 0;
  std::size_t first = 0, last = 0;
};
std::vector<Sequence> sequences(const Dataset& d);

/// Rows W.. of every sequence with their true past labels as extra features.
/// Throws ValidationError when a sequence has W or fewer rows.
Dataset lagged_dataset(const Dataset& d, std::size_t window);

MultihorizonModel train_multihorizon(const Dataset& train, const MultihorizonParams& params);

struct HorizonPrediction {
  std::vector<std::size_t> rows;  // source row of each prediction
  std::vector<int> predicted, truth;
  /// 1 where the past-label window fed to the model differs from the truth.
  std::vector<std::uint8_t> window_differs;
};

/// Teacher-forced feeds the true past labels. Recursive seeds each sequence
/// with its first W true labels and then feeds back its own predictions.
HorizonPrediction predict_multihorizon(const MultihorizonModel& model, const Dataset& d, HorizonMode mode,
                                       std::size_t workers = 1);

std::string serialize_multihorizon(const MultihorizonModel& m);
MultihorizonModel parse_multihorizon(const std::string& text);
void write_multihorizon(const std::string& path, const MultihorizonModel& m);
MultihorizonModel read_multihorizon(const std::string& path);

}  // namespace comfort
