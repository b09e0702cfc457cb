#include "etongue/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "etongue/error.hpp"

namespace etongue {

namespace {

struct ChannelFeatures {
  double shift = 0.0;
  double slope = 0.0;
  double area = 0.0;
  double t63 = 0.0;
  double peak = 0.0;
};

ChannelFeatures channel_features(const Eigen::Ref<const Eigen::VectorXd>& v,
                                 std::size_t transition, double dt) {
  const std::size_t n = static_cast<std::size_t>(v.size());
  const std::size_t post = n - transition;

  const std::size_t skip = transition / 20;
  double baseline = 0.0;
  for (std::size_t s = skip; s < transition; ++s) baseline += v[s];
  baseline /= static_cast<double>(transition - skip);

  ChannelFeatures f;

  const std::size_t tail = std::max<std::size_t>(1, post / 10);
  double tail_mean = 0.0;
  for (std::size_t s = n - tail; s < n; ++s) tail_mean += v[s] - baseline;
  f.shift = tail_mean / static_cast<double>(tail);

  const std::size_t head = std::max<std::size_t>(2, post / 10);
  double t_mean = 0.0;
  double y_mean = 0.0;
  for (std::size_t j = 0; j < head; ++j) {
    t_mean += static_cast<double>(j) * dt;
    y_mean += v[transition + j] - baseline;
  }
  t_mean /= static_cast<double>(head);
  y_mean /= static_cast<double>(head);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t j = 0; j < head; ++j) {
    const double dx = static_cast<double>(j) * dt - t_mean;
    sxy += dx * (v[transition + j] - baseline - y_mean);
    sxx += dx * dx;
  }
  f.slope = sxy / sxx;

  for (std::size_t j = 0; j + 1 < post; ++j) {
    f.area += 0.5 * dt * ((v[transition + j] - baseline) + (v[transition + j + 1] - baseline));
  }

  const double threshold = 0.632 * std::abs(f.shift);
  bool reached = std::abs(f.shift) < kNullShiftMv;
  for (std::size_t j = 0; j < post; ++j) {
    const double dev = std::abs(v[transition + j] - baseline);
    f.peak = std::max(f.peak, dev);
    if (!reached && dev >= threshold) {
      f.t63 = static_cast<double>(j) * dt;
      reached = true;
    }
  }
  if (!reached) f.t63 = static_cast<double>(post - 1) * dt;
  return f;
}

}  // namespace

FeatureVector extract_features(const TransientRecording& rec) {
  rec.validate();
  const std::size_t pre = rec.transition_index;
  const std::size_t post = rec.n_samples() - rec.transition_index;
  if (pre < static_cast<std::size_t>(kMinPreTransitionSamples) ||
      post < static_cast<std::size_t>(kMinPostTransitionSamples)) {
    throw RecordingError("recording needs >= 20 samples before and >= 50 after the transition (has " +
                         std::to_string(pre) + " and " + std::to_string(post) + ")");
  }

  FeatureVector fv;
  fv.reference_liquid_id = rec.reference_liquid_id;
  fv.test_liquid_id = rec.test_liquid_id;
  fv.values.resize(kFeatureCount);
  const double dt = 1.0 / rec.sample_rate_hz;
  for (int c = 0; c < kChannels; ++c) {
    const Eigen::VectorXd column = rec.voltages_mv.col(c);
    const ChannelFeatures f = channel_features(column, rec.transition_index, dt);
    double* out = fv.values.data() + c * kFeaturesPerChannel;
    out[0] = f.shift;
    out[1] = f.slope;
    out[2] = f.area;
    out[3] = f.t63;
    out[4] = f.peak;
  }
  return fv;
}

std::string feature_name(int index) {
  if (index < 0 || index >= kFeatureCount) {
    throw ArgumentError("feature index out of range: " + std::to_string(index));
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ch%02d.f%d", index / kFeaturesPerChannel + 1,
                index % kFeaturesPerChannel);
  return buf;
}

int feature_index(const std::string& name) {
  int channel = 0;
  int kind = 0;
  char tail = 0;
  if (name.size() != 7 || std::sscanf(name.c_str(), "ch%2d.f%1d%c", &channel, &kind, &tail) != 2) {
    return -1;
  }
  if (channel < 1 || channel > kChannels || kind < 0 || kind >= kFeaturesPerChannel) return -1;
  const int index = (channel - 1) * kFeaturesPerChannel + kind;
  return feature_name(index) == name ? index : -1;
}

}  // namespace etongue
