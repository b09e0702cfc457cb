#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace etongue {

// Feature matrix with per-row provenance and the labels of every task.
// sample_id names the physical liquid; all repeats of one liquid share it.
struct LabeledDataset {
  Eigen::MatrixXd features;  // n x 75
  std::vector<std::string> sample_ids;
  std::vector<std::string> test_liquid_ids;
  std::vector<std::string> reference_liquid_ids;
  // task -> per-row label; nullopt when the row does not take part in the task
  std::map<std::string, std::vector<std::optional<std::string>>> task_labels;

  std::size_t n_rows() const { return sample_ids.size(); }
};

// The rows of one task, ready for training or cross-validation.
struct TaskData {
  std::string task;
  Eigen::MatrixXd features;
  std::vector<std::string> sample_ids;
  std::vector<std::string> labels;
  std::vector<std::size_t> source_rows;  // row in the parent LabeledDataset
};

// Rows labelled for `task`, in dataset order. Throws ValidationError when the
// task is unknown or has no labelled rows.
TaskData select_task(const LabeledDataset& dataset, const std::string& task);

}  // namespace etongue
