#include "etongue/pipeline_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "etongue/digest.hpp"
#include "etongue/error.hpp"
#include "etongue/features.hpp"
#include "etongue/recording_io.hpp"

namespace etongue {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifests

DatasetManifest manifest_from_json(const json& doc, const fs::path& base_dir) {
  try {
    DatasetManifest m;
    m.base_dir = base_dir;
    m.schema_version = doc.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      throw IncompatibleVersionError("manifest schema_version " + std::to_string(m.schema_version) +
                                     " is not supported (expected " +
                                     std::to_string(kManifestSchemaVersion) + ")");
    }
    for (const auto& r : doc.at("recordings")) {
      ManifestRecording rec;
      rec.path = r.at("path").get<std::string>();
      rec.sample_id = r.at("sample_id").get<std::string>();
      rec.reference_liquid_id = r.value("reference_liquid_id", std::string());
      if (r.contains("labels")) rec.labels = r["labels"].get<std::map<std::string, std::string>>();
      if (r.contains("tasks")) rec.tasks = r["tasks"].get<std::vector<std::string>>();
      m.recordings.push_back(std::move(rec));
    }
    if (doc.contains("tasks")) {
      m.tasks = doc["tasks"].get<std::map<std::string, std::map<std::string, std::string>>>();
    }
    m.notes = doc.value("notes", std::string());
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

json manifest_to_json(const DatasetManifest& m) {
  json doc;
  doc["schema_version"] = m.schema_version;
  json recs = json::array();
  for (const auto& r : m.recordings) {
    json j = {{"path", r.path}, {"sample_id", r.sample_id},
              {"reference_liquid_id", r.reference_liquid_id}};
    if (!r.labels.empty()) j["labels"] = r.labels;
    if (r.tasks) j["tasks"] = *r.tasks;
    recs.push_back(std::move(j));
  }
  doc["recordings"] = std::move(recs);
  doc["tasks"] = m.tasks;
  doc["notes"] = m.notes;
  return doc;
}

DatasetManifest load_manifest(const fs::path& path) {
  return manifest_from_json(read_json_file(path), path.parent_path());
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  write_text_file(path, manifest_to_json(manifest).dump(2) + "\n");
}

std::vector<std::string> manifest_tasks(const DatasetManifest& manifest) {
  std::set<std::string> names;
  for (const auto& [task, _] : manifest.tasks) names.insert(task);
  for (const auto& r : manifest.recordings)
    for (const auto& [task, _] : r.labels) names.insert(task);
  return {names.begin(), names.end()};
}

LabeledDataset label_features(const DatasetManifest& manifest,
                              const std::vector<FeatureVector>& features) {
  if (manifest.recordings.empty()) throw ValidationError("manifest lists no recordings");
  if (features.size() != manifest.recordings.size()) {
    throw ArgumentError("one feature vector per manifest recording is required");
  }
  const std::vector<std::string> tasks = manifest_tasks(manifest);
  const std::size_t n = features.size();

  LabeledDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), kFeatureCount);
  for (const auto& t : tasks) ds.task_labels[t].assign(n, std::nullopt);

  std::set<std::string> gaps;
  std::set<std::string> conflicts;
  std::set<std::string> reference_mismatch;
  // (task, sample_id) -> label seen on an earlier recording
  std::map<std::pair<std::string, std::string>, std::string> seen;

  for (std::size_t i = 0; i < n; ++i) {
    const ManifestRecording& r = manifest.recordings[i];
    if (features[i].values.size() != kFeatureCount) throw ArgumentError("feature vector width mismatch");
    ds.features.row(static_cast<Eigen::Index>(i)) = features[i].values.transpose();
    ds.sample_ids.push_back(r.sample_id);
    ds.test_liquid_ids.push_back(features[i].test_liquid_id);
    ds.reference_liquid_ids.push_back(features[i].reference_liquid_id);
    if (!r.reference_liquid_id.empty() && r.reference_liquid_id != features[i].reference_liquid_id) {
      reference_mismatch.insert(r.path);
    }

    for (const auto& task : tasks) {
      const bool takes_part =
          !r.tasks || std::find(r.tasks->begin(), r.tasks->end(), task) != r.tasks->end();
      if (!takes_part) continue;
      std::optional<std::string> label;
      if (auto t = manifest.tasks.find(task); t != manifest.tasks.end()) {
        if (auto l = t->second.find(r.sample_id); l != t->second.end()) label = l->second;
      }
      if (auto l = r.labels.find(task); l != r.labels.end()) {
        if (label && *label != l->second) conflicts.insert(r.sample_id);
        label = l->second;
      }
      if (!label) {
        gaps.insert(r.sample_id + " (" + task + ")");
        continue;
      }
      auto [it, inserted] = seen.emplace(std::make_pair(task, r.sample_id), *label);
      if (!inserted && it->second != *label) conflicts.insert(r.sample_id);
      ds.task_labels[task][i] = *label;
    }
  }

  auto join = [](const std::set<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
  };
  if (!conflicts.empty()) throw ValidationError("conflicting labels for sample_ids: " + join(conflicts));
  if (!gaps.empty()) throw ValidationError("missing labels for sample_ids: " + join(gaps));
  if (!reference_mismatch.empty()) {
    throw ValidationError("reference liquid differs from the recording sidecar for: " +
                          join(reference_mismatch));
  }
  return ds;
}

LabeledDataset load_dataset(const DatasetManifest& manifest) {
  if (manifest.recordings.empty()) throw ValidationError("manifest lists no recordings");
  std::vector<FeatureVector> features;
  features.reserve(manifest.recordings.size());
  for (const auto& r : manifest.recordings) {
    const fs::path path = manifest.base_dir / r.path;
    if (!fs::exists(path)) throw IoError("recording not found: " + path.string());
    features.push_back(extract_features(read_recording(path)));
  }
  return label_features(manifest, features);
}

std::string purchase_label(int yes_votes, int panel_size) {
  if (panel_size < 1 || yes_votes < 0 || yes_votes > panel_size) {
    throw ArgumentError("invalid panel vote count");
  }
  return 2 * yes_votes >= panel_size ? "accepted" : "rejected";
}

std::string alcohol_label(double vol_percent) {
  if (vol_percent >= 12.5 && vol_percent <= 13.5) return "low";
  if (vol_percent >= 14.0 && vol_percent <= 16.5) return "high";
  throw ArgumentError("alcohol content outside the low (12.5-13.5) and high (14-16.5) vol% groups");
}

// ---------------------------------------------------------------------------
// Bundles

namespace {

std::string encode_doubles(const double* data, std::size_t n) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(16 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int shift = 60; shift >= 0; shift -= 4) out += kHex[(bits >> shift) & 0xF];
  }
  return out;
}

std::vector<double> decode_doubles(const std::string& hex) {
  if (hex.size() % 16 != 0) throw IntegrityError("numeric array has a truncated entry");
  std::vector<double> out(hex.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < 16; ++j) {
      const char c = hex[16 * i + j];
      int v;
      if (c >= '0' && c <= '9') v = c - '0';
      else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
      else throw IntegrityError("numeric array contains a non-hex digit");
      bits = (bits << 4) | static_cast<std::uint64_t>(v);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

json vec_json(const Eigen::VectorXd& v) {
  return encode_doubles(v.data(), static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd vec_from(const json& doc, Eigen::Index expected = -1) {
  const auto values = decode_doubles(doc.get<std::string>());
  if (expected >= 0 && static_cast<Eigen::Index>(values.size()) != expected) {
    throw IntegrityError("numeric array has the wrong length");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", encode_doubles(rm.data(), static_cast<std::size_t>(rm.size()))}};
}

Eigen::MatrixXd mat_from(const json& doc) {
  const auto rows = doc.at("rows").get<Eigen::Index>();
  const auto cols = doc.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) throw IntegrityError("negative matrix shape");
  const auto values = decode_doubles(doc.at("data").get<std::string>());
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw IntegrityError("matrix payload does not match its shape");
  }
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, cols);
}

json classifier_json(const Classifier& classifier) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BaselineModel>) {
          return {{"kind", "baseline"}, {"class_probabilities", vec_json(m.class_probabilities)}};
        } else if constexpr (std::is_same_v<T, LDAModel>) {
          return {{"kind", "lda"},
                  {"class_means", mat_json(m.class_means)},
                  {"pooled_covariance_inverse", mat_json(m.pooled_covariance_inverse)},
                  {"log_priors", vec_json(m.log_priors)}};
        } else if constexpr (std::is_same_v<T, KNNModel>) {
          return {{"kind", "knn"},
                  {"k", m.k},
                  {"n_classes", m.n_classes},
                  {"training_scores", mat_json(m.training_scores)},
                  {"training_labels", m.training_labels}};
        } else {
          json trees = json::array();
          for (const auto& tree : m.trees) {
            std::vector<int> feature, left, right;
            std::vector<double> threshold;
            std::vector<std::vector<int>> counts;
            for (const auto& node : tree.nodes) {
              feature.push_back(node.feature);
              left.push_back(node.left);
              right.push_back(node.right);
              threshold.push_back(node.threshold);
              counts.push_back(node.class_counts);
            }
            trees.push_back({{"feature", feature},
                             {"threshold", encode_doubles(threshold.data(), threshold.size())},
                             {"left", left},
                             {"right", right},
                             {"class_counts", counts}});
          }
          return {{"kind", "bagged_trees"},
                  {"n_trees", m.n_trees},
                  {"n_classes", m.n_classes},
                  {"bootstrap_seed", m.bootstrap_seed},
                  {"trees", std::move(trees)}};
        }
      },
      classifier);
}

Classifier classifier_from(const json& doc, int n_classes, Eigen::Index width) {
  const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
  switch (kind) {
    case ModelKind::kBaseline: {
      BaselineModel m;
      m.class_probabilities = vec_from(doc.at("class_probabilities"), n_classes);
      return m;
    }
    case ModelKind::kLda: {
      LDAModel m;
      m.class_means = mat_from(doc.at("class_means"));
      m.pooled_covariance_inverse = mat_from(doc.at("pooled_covariance_inverse"));
      m.log_priors = vec_from(doc.at("log_priors"), n_classes);
      if (m.class_means.rows() != n_classes || m.class_means.cols() != width ||
          m.pooled_covariance_inverse.rows() != width || m.pooled_covariance_inverse.cols() != width) {
        throw IntegrityError("LDA parameters have inconsistent shapes");
      }
      return m;
    }
    case ModelKind::kKnn: {
      KNNModel m;
      m.k = doc.at("k").get<int>();
      m.n_classes = doc.at("n_classes").get<int>();
      m.training_scores = mat_from(doc.at("training_scores"));
      m.training_labels = doc.at("training_labels").get<std::vector<int>>();
      if (m.n_classes != n_classes || m.training_scores.cols() != width ||
          static_cast<std::size_t>(m.training_scores.rows()) != m.training_labels.size() ||
          m.k < 1 || m.k > m.training_scores.rows()) {
        throw IntegrityError("KNN parameters have inconsistent shapes");
      }
      for (int y : m.training_labels) {
        if (y < 0 || y >= n_classes) throw IntegrityError("KNN label out of range");
      }
      return m;
    }
    case ModelKind::kBaggedTrees: {
      BaggedTreesModel m;
      m.n_trees = doc.at("n_trees").get<int>();
      m.n_classes = doc.at("n_classes").get<int>();
      m.bootstrap_seed = doc.at("bootstrap_seed").get<std::uint64_t>();
      if (m.n_classes != n_classes) throw IntegrityError("tree class count mismatch");
      for (const auto& t : doc.at("trees")) {
        const auto feature = t.at("feature").get<std::vector<int>>();
        const auto left = t.at("left").get<std::vector<int>>();
        const auto right = t.at("right").get<std::vector<int>>();
        const auto threshold = decode_doubles(t.at("threshold").get<std::string>());
        const auto counts = t.at("class_counts").get<std::vector<std::vector<int>>>();
        const std::size_t n = feature.size();
        if (n == 0 || left.size() != n || right.size() != n || threshold.size() != n ||
            counts.size() != n) {
          throw IntegrityError("tree arrays have inconsistent lengths");
        }
        DecisionTree tree;
        for (std::size_t i = 0; i < n; ++i) {
          TreeNode node;
          node.feature = feature[i];
          node.threshold = threshold[i];
          node.left = left[i];
          node.right = right[i];
          node.class_counts = counts[i];
          const auto in_range = [&](int child) {
            return child > static_cast<int>(i) && child < static_cast<int>(n);
          };
          if (node.is_leaf()) {
            if (node.class_counts.size() != static_cast<std::size_t>(n_classes)) {
              throw IntegrityError("leaf class counts have the wrong length");
            }
          } else if (node.feature >= width || !in_range(node.left) || !in_range(node.right)) {
            throw IntegrityError("tree node references are out of range");
          }
          tree.nodes.push_back(std::move(node));
        }
        m.trees.push_back(std::move(tree));
      }
      if (static_cast<int>(m.trees.size()) != m.n_trees) throw IntegrityError("tree count mismatch");
      return m;
    }
  }
  throw IntegrityError("unknown classifier kind");
}

json bundle_body(const TrainedPipeline& p) {
  json doc;
  doc["format"] = kBundleFormat;
  doc["schema_version"] = kBundleSchemaVersion;
  doc["feature_spec_id"] = p.feature_spec_id;
  doc["label_map"] = p.label_map;
  doc["training_fingerprint"] = {{"dataset_sha256", p.fingerprint.dataset_sha256},
                                 {"seed", p.fingerprint.seed},
                                 {"timestamp", p.fingerprint.timestamp},
                                 {"task", p.fingerprint.task},
                                 {"n_rows", p.fingerprint.n_rows}};
  std::vector<int> constant;
  for (std::size_t j = 0; j < p.standardizer.constant.size(); ++j) {
    if (p.standardizer.constant[j]) constant.push_back(static_cast<int>(j));
  }
  doc["standardizer"] = {{"means", vec_json(p.standardizer.means)},
                         {"stds", vec_json(p.standardizer.stds)},
                         {"constant_columns", constant}};
  doc["pca"] = {{"mean", vec_json(p.pca.mean)},
                {"components", mat_json(p.pca.components)},
                {"explained_variance", vec_json(p.pca.explained_variance)},
                {"full_variance_ratio", vec_json(p.pca.full_variance_ratio)}};
  doc["classifier"] = classifier_json(p.classifier);
  return doc;
}

}  // namespace

json bundle_to_json(const TrainedPipeline& pipeline) {
  json doc = bundle_body(pipeline);
  doc["checksum"] = "sha256:" + sha256_hex(doc.dump());
  return doc;
}

TrainedPipeline bundle_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", std::string()) != kBundleFormat) {
    throw IntegrityError("not a model bundle");
  }
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer()) {
    throw IntegrityError("bundle has no schema_version");
  }
  const int version = doc["schema_version"].get<int>();
  if (version != kBundleSchemaVersion) {
    throw IncompatibleVersionError("bundle schema_version " + std::to_string(version) +
                                   " is not supported (expected " +
                                   std::to_string(kBundleSchemaVersion) + ")");
  }
  if (!doc.contains("checksum") || !doc["checksum"].is_string()) {
    throw IntegrityError("bundle has no checksum");
  }
  json body = doc;
  body.erase("checksum");
  if (doc["checksum"].get<std::string>() != "sha256:" + sha256_hex(body.dump())) {
    throw IntegrityError("bundle checksum mismatch");
  }

  try {
    TrainedPipeline p;
    p.feature_spec_id = doc.at("feature_spec_id").get<std::string>();
    if (p.feature_spec_id != kFeatureSpecId) {
      throw IncompatibleVersionError("bundle was built for feature set '" + p.feature_spec_id + "'");
    }
    p.label_map = doc.at("label_map").get<std::vector<std::string>>();
    if (p.label_map.empty() || !std::is_sorted(p.label_map.begin(), p.label_map.end())) {
      throw IntegrityError("label_map must be a non-empty sorted list");
    }
    const json& fp = doc.at("training_fingerprint");
    p.fingerprint.dataset_sha256 = fp.at("dataset_sha256").get<std::string>();
    p.fingerprint.seed = fp.at("seed").get<std::uint64_t>();
    p.fingerprint.timestamp = fp.at("timestamp").get<std::string>();
    p.fingerprint.task = fp.at("task").get<std::string>();
    p.fingerprint.n_rows = fp.at("n_rows").get<std::size_t>();

    const json& st = doc.at("standardizer");
    p.standardizer.means = vec_from(st.at("means"));
    const Eigen::Index width = p.standardizer.means.size();
    p.standardizer.stds = vec_from(st.at("stds"), width);
    p.standardizer.constant.assign(static_cast<std::size_t>(width), false);
    for (int j : st.at("constant_columns").get<std::vector<int>>()) {
      if (j < 0 || j >= width) throw IntegrityError("constant column out of range");
      p.standardizer.constant[static_cast<std::size_t>(j)] = true;
    }

    const json& pca = doc.at("pca");
    p.pca.mean = vec_from(pca.at("mean"), width);
    p.pca.components = mat_from(pca.at("components"));
    if (p.pca.components.rows() != width) throw IntegrityError("PCA components have the wrong height");
    p.pca.explained_variance = vec_from(pca.at("explained_variance"), p.pca.components.cols());
    p.pca.full_variance_ratio = vec_from(pca.at("full_variance_ratio"), width);
    p.pca.explained_variance_ratio = p.pca.full_variance_ratio.head(p.pca.components.cols());

    p.classifier = classifier_from(doc.at("classifier"), static_cast<int>(p.label_map.size()),
                                   p.pca.components.cols());
    return p;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed bundle: ") + e.what());
  } catch (const ArgumentError& e) {
    throw IntegrityError(std::string("malformed bundle: ") + e.what());
  }
}

std::string serialize_bundle(const TrainedPipeline& pipeline) {
  return bundle_to_json(pipeline).dump(2) + "\n";
}

TrainedPipeline parse_bundle(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw IntegrityError(std::string("bundle is not valid JSON (truncated or corrupt): ") + e.what());
  }
  return bundle_from_json(doc);
}

void save_bundle(const TrainedPipeline& pipeline, const fs::path& path) {
  write_text_file(path, serialize_bundle(pipeline));
}

TrainedPipeline load_bundle(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open bundle " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bundle(buf.str());
}

std::string bundle_checksum(const TrainedPipeline& pipeline) {
  return "sha256:" + sha256_hex(bundle_body(pipeline).dump());
}

json bundle_metadata(const TrainedPipeline& p) {
  return {{"format", kBundleFormat},
          {"schema_version", kBundleSchemaVersion},
          {"feature_spec_id", p.feature_spec_id},
          {"model_kind", std::string(model_kind_name(p.kind()))},
          {"label_map", p.label_map},
          {"n_components", p.pca.n_selected()},
          {"checksum", bundle_checksum(p)},
          {"training_fingerprint",
           {{"dataset_sha256", p.fingerprint.dataset_sha256},
            {"seed", p.fingerprint.seed},
            {"timestamp", p.fingerprint.timestamp},
            {"task", p.fingerprint.task},
            {"n_rows", p.fingerprint.n_rows}}}};
}

Prediction predict_recording(const TrainedPipeline& pipeline, const TransientRecording& rec) {
  return pipeline.predict(extract_features(rec).values);
}

json prediction_to_json(const TrainedPipeline& pipeline, const Prediction& prediction) {
  json scores = json::object();
  for (std::size_t c = 0; c < pipeline.label_map.size(); ++c) {
    scores[pipeline.label_map[c]] = prediction.scores[static_cast<Eigen::Index>(c)];
  }
  return {{"label", prediction.label}, {"scores", std::move(scores)}};
}

// ---------------------------------------------------------------------------
// CSV exports

std::string features_to_csv(const LabeledDataset& ds) {
  std::string out = "sample_id,test_liquid_id";
  for (int f = 0; f < kFeatureCount; ++f) out += "," + feature_name(f);
  out += '\n';
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    out += ds.sample_ids[i] + "," + ds.test_liquid_ids[i];
    for (Eigen::Index f = 0; f < ds.features.cols(); ++f) {
      out += "," + format_double(ds.features(static_cast<Eigen::Index>(i), f));
    }
    out += '\n';
  }
  return out;
}

std::string scores_to_csv(const Eigen::MatrixXd& scores, const std::vector<std::string>& sample_ids,
                          const std::vector<std::string>& labels) {
  std::string out;
  for (Eigen::Index c = 0; c < scores.cols(); ++c) out += "pc" + std::to_string(c + 1) + ",";
  out += "sample_id,label\n";
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index c = 0; c < scores.cols(); ++c) out += format_double(scores(i, c)) + ",";
    const auto r = static_cast<std::size_t>(i);
    out += sample_ids.at(r) + "," + (r < labels.size() ? labels[r] : std::string()) + "\n";
  }
  return out;
}

std::string sensitivity_to_csv(const SensitivityReport& report) {
  std::string out = "feature,acid,slope,r_squared\n";
  for (Eigen::Index f = 0; f < report.slopes.rows(); ++f) {
    for (std::size_t a = 0; a < report.acids.size(); ++a) {
      const auto col = static_cast<Eigen::Index>(a);
      out += feature_name(static_cast<int>(f)) + "," + report.acids[a] + "," +
             format_double(report.slopes(f, col)) + "," + format_double(report.r_squared(f, col)) +
             "\n";
    }
  }
  return out;
}

}  // namespace etongue
