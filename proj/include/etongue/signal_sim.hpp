#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace etongue {

inline constexpr int kElectrodes = 16;
// One differential channel per sensing electrode against the shared
// pseudo-reference electrode (electrode 16).
inline constexpr int kChannels = kElectrodes - 1;

// Static description of the polymeric sensor array. Each differential channel
// responds to every analyte with a Nernst-like slope (mV per decade of the
// test/reference concentration ratio) and relaxes with a first-order time
// constant.
struct SensorArraySpec {
  std::vector<std::string> analytes;
  Eigen::MatrixXd cross_sensitivity;  // kChannels x analytes.size(), mV/decade
  Eigen::VectorXd tau_s;              // kChannels, > 0
  Eigen::VectorXd baseline_mv;        // kChannels
  Eigen::VectorXd drift_mv_per_s;     // kChannels
  double noise_sigma_mv = 0.0;

  // Throws ConfigurationError when shapes or values are inconsistent.
  void validate() const;
  // Column of `name` in cross_sensitivity, or -1.
  int analyte_index(const std::string& name) const;
};

// Randomised array used by presets and tests: slopes uniform in
// [-max_slope, max_slope], tau uniform in [tau_min, tau_max], baselines
// uniform in [-50, 50] mV, zero drift and zero noise.
struct RandomArrayOptions {
  double max_slope_mv_per_decade = 10.0;
  double tau_min_s = 3.0;
  double tau_max_s = 15.0;
};
SensorArraySpec make_random_array(const std::vector<std::string>& analytes,
                                  std::uint64_t seed,
                                  const RandomArrayOptions& options = {});

struct LiquidProfile {
  std::string id;
  std::map<std::string, double> concentrations_m;  // analyte -> molarity, > 0
  std::map<std::string, std::string> class_labels;  // task -> label
};

struct TransientRecording {
  double sample_rate_hz = 0.0;
  std::size_t transition_index = 0;
  Eigen::MatrixXd voltages_mv;  // n_samples x kChannels
  std::string reference_liquid_id;
  std::string test_liquid_id;

  std::size_t n_samples() const { return static_cast<std::size_t>(voltages_mv.rows()); }
  double time_s(std::size_t sample) const { return static_cast<double>(sample) / sample_rate_hz; }

  // Structural checks only (shape, transition position, finite values).
  // Throws RecordingError or DataError.
  void validate() const;
};

struct SimulationTiming {
  double duration_s = 120.0;
  double sample_rate_hz = 10.0;
  double transition_s = 10.0;
};

// Asymptotic shift of every channel for a reference -> test switch:
// S_i = sum_a k[i,a] * log10(c_test,a / c_ref,a).
Eigen::VectorXd asymptotic_shift(const SensorArraySpec& array,
                                 const LiquidProfile& reference,
                                 const LiquidProfile& test);

TransientRecording simulate_transient(const SensorArraySpec& array,
                                      const LiquidProfile& reference,
                                      const LiquidProfile& test,
                                      const SimulationTiming& timing,
                                      std::uint64_t seed);

// `repeats` recordings of every profile except the reference one. Each
// recording's noise stream depends only on (seed, profile position, repeat),
// so the shuffle never changes the content of a recording.
std::vector<TransientRecording> generate_dataset(
    const SensorArraySpec& array, const std::vector<LiquidProfile>& profiles,
    const std::string& reference_id, int repeats, bool randomize_order,
    std::uint64_t seed, const SimulationTiming& timing = {});

}  // namespace etongue
