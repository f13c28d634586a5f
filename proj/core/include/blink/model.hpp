#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "blink/activity.hpp"
#include "blink/power_trace.hpp"

namespace blink {

struct Dataset {
  Eigen::MatrixXd x;  // one row per window, one column per feature
  Eigen::VectorXd y;  // watts
  std::vector<FeatureDesc> features;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(y.size()); }
  Dataset select_rows(std::span<const std::size_t> rows) const;
};

/// Activity counts as a design matrix; y is all zeros.
Dataset activity_dataset(const ActivityMatrix& activity);

/// Pairs activity windows with power windows. Throws WindowCountMismatch,
/// ResolutionMismatch or InvalidArgument (non-finite power).
Dataset assemble_dataset(const ActivityMatrix& activity, const WindowedPower& power);

struct DatasetSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Seeded shuffle; the first ceil(ratio * n) shuffled rows train.
/// Throws TooFewRows (n < 10) or InvalidArgument (ratio outside (0, 1)).
DatasetSplit split_dataset(const Dataset& d, double ratio, std::uint64_t seed);

enum class SelectionMode { kGreedy, kExhaustive };
std::string_view to_string(SelectionMode mode) noexcept;
std::optional<SelectionMode> parse_selection_mode(std::string_view text) noexcept;

struct PowerTerm {
  FeatureDesc feature;
  double weight = 0.0;  // watts per count
};

/// First-order linear model: intercept + sum of weight * count.
struct PowerModel {
  double intercept = 0.0;
  std::vector<PowerTerm> terms;
  std::size_t budget = 0;

  std::size_t hw_terms() const noexcept;
  std::size_t st_terms() const noexcept;
  /// Throws FeatureMismatch if a term's feature is missing from `d`.
  Eigen::VectorXd predict(const Dataset& d) const;
};

struct IdentifyOptions {
  std::size_t budget = 8;
  SelectionMode mode = SelectionMode::kGreedy;
  double min_relative_improvement = 1e-3;
  /// Iteratively drop the most negative term and refit until all weights
  /// are non-negative.
  bool non_negative = false;
  /// Greedy only: after each addition, replace selected features while a
  /// single exchange lowers the training error.
  bool exchange = true;
  /// Exhaustive enumeration is refused above this many features.
  std::size_t exhaustive_feature_limit = 16;
};

struct SelectionStep {
  FeatureDesc added;
  double train_rmse = 0.0;
};

struct Exchange {
  FeatureDesc removed;
  FeatureDesc added;
};

struct Identification {
  PowerModel model;
  double train_rmse = 0.0;
  double baseline_rmse = 0.0;  // intercept-only
  std::vector<SelectionStep> steps;  // greedy only, in order
  std::vector<FeatureDesc> degenerate;  // candidates dropped as collinear
  std::vector<FeatureDesc> removed_negative;
  std::vector<Exchange> exchanges;  // greedy refinement, in order
  std::size_t fits = 0;  // least-squares solves performed
};

/// Budgeted subset selection with least-squares weights. Greedy forward
/// selection adds, per step, the feature whose refit lowers train RMSE most
/// (lowest feature index on exact ties), never two features of one signal,
/// and stops at the budget or when the relative improvement falls below
/// the threshold. Unless disabled, each step is followed by exchange
/// passes that swap one selected feature for another while that helps. Exhaustive mode enumerates every admissible subset of
/// size <= budget. Throws InvalidArgument or TooFewRows.
Identification identify_model(const Dataset& train, const IdentifyOptions& options);

/// Least-squares RMSE of intercept + the given columns, or nullopt when the
/// columns are collinear. Column order does not affect the result.
std::optional<double> subset_rmse(const Dataset& d, std::span<const std::size_t> columns);

enum class Normalizer { kPeak, kMean, kRange };
std::string_view to_string(Normalizer n) noexcept;
std::optional<Normalizer> parse_normalizer(std::string_view text) noexcept;

struct Metrics {
  double rmse = 0.0;   // watts
  double nrmse = 0.0;  // percent of the normalizer
  double r2 = 0.0;
};

/// Throws FeatureMismatch or InvalidArgument (empty test set).
Metrics evaluate(const PowerModel& model, const Dataset& test, Normalizer normalizer = Normalizer::kPeak);

struct ModelProvenance {
  double resolution_us = 0.0;
  std::uint64_t seed = 0;
  std::optional<Metrics> train_metrics;
  std::optional<Metrics> test_metrics;
  Normalizer normalizer = Normalizer::kPeak;
};

/// Versioned document consumed by the monitor generator.
nlohmann::json model_to_json(const PowerModel& model, const ModelProvenance& provenance);
PowerModel model_from_json(const nlohmann::json& j);
nlohmann::json metrics_to_json(const Metrics& m);

}  // namespace blink
