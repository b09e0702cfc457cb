#include "etongue/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include "etongue/digest.hpp"
#include "etongue/error.hpp"

namespace etongue {

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBaseline: return "baseline";
    case ModelKind::kLda: return "lda";
    case ModelKind::kKnn: return "knn";
    case ModelKind::kBaggedTrees: return "bagged_trees";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "baseline") return ModelKind::kBaseline;
  if (name == "lda") return ModelKind::kLda;
  if (name == "knn") return ModelKind::kKnn;
  if (name == "bagged_trees" || name == "bagged" || name == "bagtrees") {
    return ModelKind::kBaggedTrees;
  }
  throw ArgumentError("unknown model kind '" + std::string(name) + "'");
}

LabelEncoding encode_labels(const std::vector<std::string>& labels) {
  LabelEncoding enc;
  enc.labels = labels;
  std::sort(enc.labels.begin(), enc.labels.end());
  enc.labels.erase(std::unique(enc.labels.begin(), enc.labels.end()), enc.labels.end());
  enc.indices.reserve(labels.size());
  for (const auto& l : labels) {
    enc.indices.push_back(static_cast<int>(
        std::lower_bound(enc.labels.begin(), enc.labels.end(), l) - enc.labels.begin()));
  }
  return enc;
}

ModelKind TrainedPipeline::kind() const {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BaselineModel>) return ModelKind::kBaseline;
        else if constexpr (std::is_same_v<T, LDAModel>) return ModelKind::kLda;
        else if constexpr (std::is_same_v<T, KNNModel>) return ModelKind::kKnn;
        else return ModelKind::kBaggedTrees;
      },
      classifier);
}

Eigen::VectorXd TrainedPipeline::transform(const Eigen::VectorXd& features) const {
  if (features.size() != standardizer.means.size()) {
    throw ArgumentError("expected " + std::to_string(standardizer.means.size()) +
                        " features, got " + std::to_string(features.size()));
  }
  if (!features.allFinite()) throw DataError("feature vector contains NaN or Inf");
  return project(pca, standardizer.apply(features));
}

std::uint64_t baseline_draw_seed(std::uint64_t seed, const Eigen::VectorXd& features) {
  // splitmix64 finaliser folded over the input bits
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    h = mix(h ^ std::bit_cast<std::uint64_t>(features[i]));
  }
  return h;
}

Prediction TrainedPipeline::predict(const Eigen::VectorXd& features) const {
  const Eigen::VectorXd x = transform(features);
  Prediction out;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BaselineModel>) {
          std::mt19937_64 rng(baseline_draw_seed(fingerprint.seed, features));
          out.class_index = m.predict(rng);
          out.scores = m.class_probabilities;
        } else if constexpr (std::is_same_v<T, LDAModel>) {
          out.scores = m.discriminants(x);
          out.class_index = m.predict(x);
        } else {
          out.scores = m.votes(x);
          out.class_index = m.predict(x);
        }
      },
      classifier);
  out.label = label_map.at(static_cast<std::size_t>(out.class_index));
  return out;
}

TrainedPipeline fit_pipeline(const Eigen::MatrixXd& features,
                             const std::vector<std::string>& labels, const ModelSpec& spec,
                             const PipelineConfig& config) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ArgumentError("feature rows and labels differ in length");
  }
  TrainedPipeline p;
  const LabelEncoding enc = encode_labels(labels);
  p.label_map = enc.labels;
  const int n_classes = static_cast<int>(enc.labels.size());

  p.standardizer = fit_standardizer(features);
  const Eigen::MatrixXd z = p.standardizer.apply(features);
  PcaOptions pca_options;
  pca_options.variance_target = config.variance_target;
  p.pca = fit_pca(z, pca_options);
  const Eigen::MatrixXd scores = project(p.pca, z);

  switch (spec.kind) {
    case ModelKind::kBaseline:
      p.classifier = baseline_fit(enc.indices, n_classes);
      break;
    case ModelKind::kLda:
      p.classifier = lda_fit(scores, enc.indices, n_classes);
      break;
    case ModelKind::kKnn:
      p.classifier = knn_fit(scores, enc.indices, n_classes, spec.k);
      break;
    case ModelKind::kBaggedTrees:
      p.classifier =
          bagged_fit(scores, enc.indices, n_classes, spec.n_trees, config.seed, config.n_threads);
      break;
  }

  p.fingerprint.dataset_sha256 = matrix_digest(features);
  p.fingerprint.seed = config.seed;
  p.fingerprint.n_rows = static_cast<std::size_t>(features.rows());
  return p;
}

}  // namespace etongue
