#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "etongue/dataset.hpp"
#include "etongue/features.hpp"
#include "etongue/signal_sim.hpp"

namespace etongue::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "etongue") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline LiquidProfile profile(std::string id, std::map<std::string, double> concentrations,
                             std::map<std::string, std::string> labels = {}) {
  LiquidProfile p;
  p.id = std::move(id);
  p.concentrations_m = std::move(concentrations);
  p.class_labels = std::move(labels);
  return p;
}

// One analyte "a" sensed only by channel 0 with slope k; all other channels flat.
inline SensorArraySpec single_channel_array(double k_mv_per_decade, double tau_s,
                                            double baseline_mv = 0.0) {
  SensorArraySpec array;
  array.analytes = {"a"};
  array.cross_sensitivity = Eigen::MatrixXd::Zero(kChannels, 1);
  array.cross_sensitivity(0, 0) = k_mv_per_decade;
  array.tau_s = Eigen::VectorXd::Constant(kChannels, tau_s);
  array.baseline_mv = Eigen::VectorXd::Zero(kChannels);
  array.baseline_mv[0] = baseline_mv;
  array.drift_mv_per_s = Eigen::VectorXd::Zero(kChannels);
  return array;
}

// Gaussian blobs in `dims` dimensions; class c is centred at c * spacing along
// axis c % dims.
inline void gaussian_blobs(int n_classes, int per_class, int dims, double spacing,
                           std::uint64_t seed, Eigen::MatrixXd& X, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  X.resize(n_classes * per_class, dims);
  y.clear();
  for (int c = 0; c < n_classes; ++c) {
    for (int r = 0; r < per_class; ++r) {
      const int row = c * per_class + r;
      for (int d = 0; d < dims; ++d) X(row, d) = normal(rng);
      X(row, c % dims) += spacing * (c / dims + 1) * (c % 2 == 0 ? 1.0 : -1.0);
      y.push_back(c);
    }
  }
}

// Synthetic multi-class tasting experiment. Classes sit on a grid in the
// log-concentration space of two analytes. The grid step is chosen so that the
// RMS per-channel difference between neighbouring classes in the steady-state
// shift feature equals `separation` times that feature's noise std
// (sigma * sqrt(1/n_tail + 1/n_baseline) for the default timing).
struct ClassExperiment {
  SensorArraySpec array;
  std::vector<LiquidProfile> profiles;  // profiles[0] is the reference
  std::string reference_id = "reference";
};

inline double shift_feature_noise(double noise_sigma_mv, const SimulationTiming& timing = {}) {
  const double pre = std::round(timing.transition_s * timing.sample_rate_hz);
  const double post = std::round(timing.duration_s * timing.sample_rate_hz) - pre;
  const double tail = std::max(1.0, std::floor(post / 10.0));
  const double baseline = pre - std::floor(pre / 20.0);
  return noise_sigma_mv * std::sqrt(1.0 / tail + 1.0 / baseline);
}

inline ClassExperiment grid_experiment(int n_classes, double separation, double noise_sigma_mv,
                                       std::uint64_t seed) {
  ClassExperiment e;
  e.array = make_random_array({"x", "y"}, seed);
  e.array.noise_sigma_mv = noise_sigma_mv;
  const double rms_x = e.array.cross_sensitivity.col(0).norm() / std::sqrt(double(kChannels));
  const double rms_y = e.array.cross_sensitivity.col(1).norm() / std::sqrt(double(kChannels));
  const double feature_noise = shift_feature_noise(noise_sigma_mv);
  const double step_x = separation * feature_noise / rms_x;  // decades
  const double step_y = separation * feature_noise / rms_y;
  const int side = static_cast<int>(std::ceil(std::sqrt(double(n_classes))));
  e.profiles.push_back(profile(e.reference_id, {{"x", 1e-3}, {"y", 1e-3}}));
  for (int c = 0; c < n_classes; ++c) {
    const double gx = c % side + 1;
    const double gy = c / side + 1;
    char id[24];
    std::snprintf(id, sizeof(id), "liquid%02d", c + 1);
    e.profiles.push_back(profile(id,
                                 {{"x", 1e-3 * std::pow(10.0, gx * step_x)},
                                  {"y", 1e-3 * std::pow(10.0, gy * step_y)}},
                                 {{"class", id}}));
  }
  return e;
}

// Simulates `repeats` recordings per liquid and returns them as task data with
// the liquid id as both sample_id and label.
inline TaskData simulate_task(const ClassExperiment& e, int repeats, std::uint64_t seed,
                              const SimulationTiming& timing = {}) {
  const auto recordings = generate_dataset(e.array, e.profiles, e.reference_id, repeats, true, seed, timing);
  TaskData data;
  data.task = "class";
  data.features.resize(static_cast<Eigen::Index>(recordings.size()), kFeatureCount);
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    data.features.row(static_cast<Eigen::Index>(i)) = extract_features(recordings[i]).values.transpose();
    data.sample_ids.push_back(recordings[i].test_liquid_id);
    data.labels.push_back(recordings[i].test_liquid_id);
    data.source_rows.push_back(i);
  }
  return data;
}

}  // namespace etongue::testing
