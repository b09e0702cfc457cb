#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "etongue/dataset.hpp"
#include "etongue/pipeline.hpp"

namespace etongue {

struct FoldScheme {
  enum class Kind { kRandomKFold, kLeaveOneLiquidOut };
  Kind kind = Kind::kRandomKFold;
  int k = 10;
  std::uint64_t seed = 0;

  static FoldScheme random(int k, std::uint64_t seed) { return {Kind::kRandomKFold, k, seed}; }
  static FoldScheme leave_one_liquid_out() { return {Kind::kLeaveOneLiquidOut, 0, 0}; }
  // "random10", "lolo"
  std::string name() const;
};

// "random<k>" (e.g. random10), "lolo", "loo" or "leave_one_liquid_out".
FoldScheme parse_fold_scheme(const std::string& text, std::uint64_t seed);

struct Fold {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
  std::string held_out_id;         // leave-one-liquid-out only
};

// Random k-fold: a seeded permutation cut into k contiguous blocks whose
// sizes differ by at most one (not stratified). Leave-one-liquid-out: one
// fold per distinct sample_id, in order of first appearance.
// Throws ArgumentError when n < k, k < 2, or fewer than two liquids exist.
std::vector<Fold> make_folds(const std::vector<std::string>& sample_ids, const FoldScheme& scheme);

struct FoldAudit {
  bool partition = true;     // every row tested exactly once, train/test disjoint
  bool no_id_leakage = true; // no sample_id on both sides of any fold
  std::vector<std::string> problems;

  bool ok() const { return partition && no_id_leakage; }
};
FoldAudit audit_folds(const std::vector<Fold>& folds, const std::vector<std::string>& sample_ids);

struct SkippedFold {
  int fold = 0;
  std::string reason;
};

struct CVReport {
  std::string model_name;
  std::string task_name;
  std::string scheme;
  std::vector<int> fold_indices;  // evaluated folds, ascending
  std::vector<double> per_fold_accuracy;
  std::vector<int> per_fold_components;
  std::vector<std::string> per_fold_held_out;  // empty ids for random folds
  double mean_accuracy = 0.0;
  double standard_error = 0.0;
  std::vector<std::string> labels;                // confusion matrix order
  std::vector<std::vector<long>> confusion;       // [true][predicted]
  std::vector<SkippedFold> skipped;
  std::optional<double> expected_accuracy;        // baseline only: mean of sum_c p_c q_c
  std::size_t n_tested = 0;
};

struct AccuracySummary {
  double mean = 0.0;
  double standard_error = 0.0;
};
// mean and std / sqrt(n), std with divisor n (population convention, the
// same one used by the standardizer). Throws InsufficientDataError on empty.
AccuracySummary summarize_accuracies(std::span<const double> accuracies);

// Per fold: fit standardizer, PCA and classifier on the training rows only,
// then score the test rows. Folds whose training rows cannot support the
// model (single class, too few rows per class) are skipped and recorded.
// Folds run on config.n_threads threads; the report does not depend on it.
CVReport cross_validate(const TaskData& data, const FoldScheme& scheme, const ModelSpec& spec,
                        const PipelineConfig& config);

nlohmann::json report_to_json(const CVReport& report);
CVReport report_from_json(const nlohmann::json& doc);

// "97.3±1.9%" for (0.973, 0.019).
std::string format_accuracy(double mean, double standard_error);

struct ResultsTable {
  static constexpr int kColumns = 4;  // Baseline, LDA, KNN, Bag Trees
  struct Row {
    std::string task;
    std::array<std::string, kColumns> cells;  // empty when no report
    std::array<std::optional<double>, kColumns> means;
    int best = -1;  // column of the best non-baseline model, -1 if none
  };
  std::vector<Row> rows;

  std::string to_markdown() const;
  std::string to_csv() const;
};

// Rows in order of first appearance of each task. Throws ArgumentError on an
// empty list.
ResultsTable format_results_table(const std::vector<CVReport>& reports);

}  // namespace etongue
