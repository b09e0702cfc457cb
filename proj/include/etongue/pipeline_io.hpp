#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "etongue/chemometrics.hpp"
#include "etongue/dataset.hpp"
#include "etongue/pipeline.hpp"
#include "etongue/signal_sim.hpp"

namespace etongue {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kBundleSchemaVersion = 1;
inline constexpr const char* kBundleFormat = "etongue-model-bundle";

// ---------------------------------------------------------------------------
// Dataset manifests
// ---------------------------------------------------------------------------

struct ManifestRecording {
  std::string path;  // CSV file, relative to the manifest directory
  std::string sample_id;
  std::string reference_liquid_id;
  // Optional per-recording labels; must agree with the task tables.
  std::map<std::string, std::string> labels;
  // Tasks this recording takes part in; absent means every declared task.
  std::optional<std::vector<std::string>> tasks;
};

// Labels are kept apart from instrument data: panel verdicts and product
// metadata arrive separately from recordings.
struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  std::vector<ManifestRecording> recordings;
  std::map<std::string, std::map<std::string, std::string>> tasks;  // task -> sample_id -> label
  std::string notes;
  std::filesystem::path base_dir;  // not serialized
};

DatasetManifest manifest_from_json(const nlohmann::json& doc,
                                   const std::filesystem::path& base_dir = {});
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Every declared task name (task tables plus per-recording labels).
std::vector<std::string> manifest_tasks(const DatasetManifest& manifest);

// Attach manifest labels to already extracted feature vectors (one per
// manifest recording, same order). Throws ValidationError listing every
// sample_id with a missing or conflicting label.
LabeledDataset label_features(const DatasetManifest& manifest,
                              const std::vector<FeatureVector>& features);

// Reads every recording (IoError names a missing path), extracts features
// and labels the rows. Row order follows manifest order.
LabeledDataset load_dataset(const DatasetManifest& manifest);

// "accepted" when at least half of the panel would buy the product.
std::string purchase_label(int yes_votes, int panel_size);
// "low" for 12.5-13.5 vol%, "high" for 14-16.5 vol%; ArgumentError otherwise.
std::string alcohol_label(double vol_percent);

// ---------------------------------------------------------------------------
// Model bundles
// ---------------------------------------------------------------------------

// Self-describing JSON: numeric arrays are hex strings of IEEE-754 bit
// patterns (16 hex digits per double, bit-exact), and `checksum` holds the
// SHA-256 of the compact dump of every other field.
nlohmann::json bundle_to_json(const TrainedPipeline& pipeline);
// Throws IncompatibleVersionError for another schema version or feature
// definition set, IntegrityError for checksum failures or malformed content.
TrainedPipeline bundle_from_json(const nlohmann::json& doc);

// Byte-stable text form (same pipeline -> same bytes).
std::string serialize_bundle(const TrainedPipeline& pipeline);
// Parse failures (including truncation) raise IntegrityError.
TrainedPipeline parse_bundle(std::string_view text);

void save_bundle(const TrainedPipeline& pipeline, const std::filesystem::path& path);
TrainedPipeline load_bundle(const std::filesystem::path& path);

// Checksum field of the serialized bundle, used as a version tag.
std::string bundle_checksum(const TrainedPipeline& pipeline);

// Metadata without the numeric payload (served by GET /model).
nlohmann::json bundle_metadata(const TrainedPipeline& pipeline);

// extract -> standardize -> project -> classify.
Prediction predict_recording(const TrainedPipeline& pipeline, const TransientRecording& rec);
// {"label": ..., "scores": {label: score, ...}}
nlohmann::json prediction_to_json(const TrainedPipeline& pipeline, const Prediction& prediction);

// ---------------------------------------------------------------------------
// Tabular exports
// ---------------------------------------------------------------------------

// sample_id,test_liquid_id,ch01.f0,...,ch15.f4
std::string features_to_csv(const LabeledDataset& dataset);
// pc1..pcm,sample_id,label
std::string scores_to_csv(const Eigen::MatrixXd& scores, const std::vector<std::string>& sample_ids,
                          const std::vector<std::string>& labels);
// feature,acid,slope,r_squared
std::string sensitivity_to_csv(const SensitivityReport& report);

}  // namespace etongue
