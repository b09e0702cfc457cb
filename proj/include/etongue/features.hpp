#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

#include "etongue/signal_sim.hpp"

namespace etongue {

inline constexpr int kFeaturesPerChannel = 5;
inline constexpr int kFeatureCount = kChannels * kFeaturesPerChannel;  // 75

// Identifies the feature definitions below; stored in model bundles so a
// bundle is never applied to vectors computed with different definitions.
inline constexpr const char* kFeatureSpecId = "etongue.transient5.v1";

// Per-channel feature kinds, in storage order.
enum class FeatureKind : int {
  kSteadyStateShift = 0,  // mV: mean of the final 10% of post-transition samples minus baseline
  kInitialSlope = 1,      // mV/s: least-squares slope over the first 10% after the switch
  kArea = 2,              // mV*s: trapezoidal integral of (V - baseline) after the switch
  kT63 = 3,               // s: first time |V - baseline| >= 0.632 |shift|
  kPeakDeviation = 4,     // mV: max |V - baseline| after the switch
};

inline constexpr int kMinPreTransitionSamples = 20;
inline constexpr int kMinPostTransitionSamples = 50;
// |shift| below this counts as no transition and t63 is reported as 0.
inline constexpr double kNullShiftMv = 1e-6;

struct FeatureVector {
  Eigen::VectorXd values;  // kFeatureCount entries, channel-major
  std::string reference_liquid_id;
  std::string test_liquid_id;

  double at(int channel, FeatureKind kind) const {
    return values[channel * kFeaturesPerChannel + static_cast<int>(kind)];
  }
};

// Five transient descriptors for each of the 15 channels.
//
// Baseline: mean of the pre-transition samples after discarding the first 5%
// (switch-on artefacts). The post-transition window runs from the transition
// sample to the end of the recording; times are measured from the transition
// sample. When t63 is never reached the window length is reported.
//
// Throws RecordingError with fewer than 20 pre- or 50 post-transition samples
// and DataError on non-finite input.
FeatureVector extract_features(const TransientRecording& rec);

// "chNN.fK" for index = (NN - 1) * 5 + K. Throws ArgumentError outside 0..74.
std::string feature_name(int index);
// Inverse of feature_name; returns -1 for unknown names.
int feature_index(const std::string& name);

}  // namespace etongue
