#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "etongue/chemometrics.hpp"
#include "etongue/classifiers.hpp"
#include "etongue/features.hpp"

namespace etongue {

enum class ModelKind { kBaseline, kLda, kKnn, kBaggedTrees };

std::string_view model_kind_name(ModelKind kind);
// Accepts the canonical names plus "bagged"/"bagtrees". Throws ArgumentError.
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kLda;
  int k = 3;
  int n_trees = 50;
};

struct PipelineConfig {
  double variance_target = 0.95;
  std::uint64_t seed = 0;
  int n_threads = 1;
};

using Classifier = std::variant<BaselineModel, LDAModel, KNNModel, BaggedTreesModel>;

struct TrainingFingerprint {
  std::string dataset_sha256;
  std::uint64_t seed = 0;
  std::string timestamp;  // empty unless supplied by the caller
  std::string task;
  std::size_t n_rows = 0;
};

struct Prediction {
  int class_index = 0;
  std::string label;
  // One entry per label_map entry: LDA discriminants, KNN or tree vote
  // counts, baseline class probabilities.
  Eigen::VectorXd scores;
};

// Standardizer -> PCA -> classifier, plus the label strings. Immutable once
// fitted; concurrent predict() calls are safe.
struct TrainedPipeline {
  std::string feature_spec_id = kFeatureSpecId;
  Standardizer standardizer;
  PCAModel pca;
  Classifier classifier;
  std::vector<std::string> label_map;  // sorted, index == class index
  TrainingFingerprint fingerprint;

  ModelKind kind() const;
  // Standardize and project one feature vector onto the kept components.
  Eigen::VectorXd transform(const Eigen::VectorXd& features) const;
  Prediction predict(const Eigen::VectorXd& features) const;
};

// Sorted distinct labels and the index of every row's label.
struct LabelEncoding {
  std::vector<std::string> labels;
  std::vector<int> indices;
};
LabelEncoding encode_labels(const std::vector<std::string>& labels);

TrainedPipeline fit_pipeline(const Eigen::MatrixXd& features,
                             const std::vector<std::string>& labels, const ModelSpec& spec,
                             const PipelineConfig& config);

// The baseline predictor draws from a stream seeded by the training seed and
// the bit pattern of the input, so repeated calls on one input agree.
std::uint64_t baseline_draw_seed(std::uint64_t seed, const Eigen::VectorXd& features);

}  // namespace etongue
