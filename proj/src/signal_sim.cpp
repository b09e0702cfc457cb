#include "etongue/signal_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "etongue/error.hpp"

namespace etongue {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

double concentration_of(const LiquidProfile& liquid, const std::string& analyte) {
  auto it = liquid.concentrations_m.find(analyte);
  if (it == liquid.concentrations_m.end()) {
    throw ConfigurationError("liquid '" + liquid.id + "' does not define analyte '" + analyte + "'");
  }
  if (!(it->second > 0.0) || !std::isfinite(it->second)) {
    throw ConfigurationError("liquid '" + liquid.id + "' has non-positive concentration for '" +
                             analyte + "'");
  }
  return it->second;
}

}  // namespace

void SensorArraySpec::validate() const {
  const auto n_analytes = static_cast<Eigen::Index>(analytes.size());
  if (cross_sensitivity.rows() != kChannels || cross_sensitivity.cols() != n_analytes) {
    throw ConfigurationError("cross_sensitivity must be 15 x n_analytes");
  }
  if (tau_s.size() != kChannels || baseline_mv.size() != kChannels ||
      drift_mv_per_s.size() != kChannels) {
    throw ConfigurationError("tau, baseline and drift need one entry per channel (15)");
  }
  if ((tau_s.array() <= 0.0).any() || !tau_s.allFinite()) {
    throw ConfigurationError("every tau must be > 0");
  }
  if (!(noise_sigma_mv >= 0.0) || !std::isfinite(noise_sigma_mv)) {
    throw ConfigurationError("noise_sigma_mv must be >= 0");
  }
  if (!cross_sensitivity.allFinite() || !baseline_mv.allFinite() || !drift_mv_per_s.allFinite()) {
    throw ConfigurationError("array parameters must be finite");
  }
}

int SensorArraySpec::analyte_index(const std::string& name) const {
  auto it = std::find(analytes.begin(), analytes.end(), name);
  return it == analytes.end() ? -1 : static_cast<int>(it - analytes.begin());
}

SensorArraySpec make_random_array(const std::vector<std::string>& analytes,
                                  std::uint64_t seed, const RandomArrayOptions& options) {
  auto engine = make_engine(seed, 0xA77A, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(engine); };

  SensorArraySpec spec;
  spec.analytes = analytes;
  spec.cross_sensitivity.resize(kChannels, static_cast<Eigen::Index>(analytes.size()));
  for (Eigen::Index i = 0; i < spec.cross_sensitivity.rows(); ++i) {
    for (Eigen::Index a = 0; a < spec.cross_sensitivity.cols(); ++a) {
      spec.cross_sensitivity(i, a) =
          uniform(-options.max_slope_mv_per_decade, options.max_slope_mv_per_decade);
    }
  }
  spec.tau_s.resize(kChannels);
  spec.baseline_mv.resize(kChannels);
  for (int i = 0; i < kChannels; ++i) {
    spec.tau_s[i] = uniform(options.tau_min_s, options.tau_max_s);
    spec.baseline_mv[i] = uniform(-50.0, 50.0);
  }
  spec.drift_mv_per_s = Eigen::VectorXd::Zero(kChannels);
  spec.noise_sigma_mv = 0.0;
  return spec;
}

void TransientRecording::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw RecordingError("sample_rate_hz must be > 0");
  }
  if (voltages_mv.cols() != kChannels) {
    throw RecordingError("recording must have 15 channels, got " +
                         std::to_string(voltages_mv.cols()));
  }
  if (transition_index == 0 || transition_index >= n_samples()) {
    throw RecordingError("transition_index must satisfy 0 < index < n_samples");
  }
  if (!voltages_mv.allFinite()) {
    throw DataError("recording contains NaN or Inf samples");
  }
}

Eigen::VectorXd asymptotic_shift(const SensorArraySpec& array, const LiquidProfile& reference,
                                 const LiquidProfile& test) {
  Eigen::VectorXd log_ratio(static_cast<Eigen::Index>(array.analytes.size()));
  for (std::size_t a = 0; a < array.analytes.size(); ++a) {
    const double c_ref = concentration_of(reference, array.analytes[a]);
    const double c_test = concentration_of(test, array.analytes[a]);
    log_ratio[static_cast<Eigen::Index>(a)] = std::log10(c_test / c_ref);
  }
  return array.cross_sensitivity * log_ratio;
}

TransientRecording simulate_transient(const SensorArraySpec& array,
                                      const LiquidProfile& reference,
                                      const LiquidProfile& test,
                                      const SimulationTiming& timing, std::uint64_t seed) {
  if (!(timing.duration_s > 0.0)) throw ArgumentError("duration_s must be > 0");
  if (!(timing.sample_rate_hz > 0.0)) throw ArgumentError("sample_rate_hz must be > 0");
  array.validate();

  const auto n = static_cast<std::size_t>(std::llround(timing.duration_s * timing.sample_rate_hz));
  const auto transition =
      static_cast<std::size_t>(std::llround(timing.transition_s * timing.sample_rate_hz));
  if (transition == 0 || transition >= n) {
    throw ArgumentError("transition time must fall strictly inside the recording");
  }
  const Eigen::VectorXd shift = asymptotic_shift(array, reference, test);

  TransientRecording rec;
  rec.sample_rate_hz = timing.sample_rate_hz;
  rec.transition_index = transition;
  rec.reference_liquid_id = reference.id;
  rec.test_liquid_id = test.id;
  rec.voltages_mv.resize(static_cast<Eigen::Index>(n), kChannels);

  auto engine = make_engine(seed, 0x5157, 0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double t0 = rec.time_s(transition);
  // Row-major fill keeps the noise stream independent of storage order.
  for (std::size_t s = 0; s < n; ++s) {
    const double t = rec.time_s(s);
    for (int i = 0; i < kChannels; ++i) {
      double v = array.baseline_mv[i] + array.drift_mv_per_s[i] * t;
      if (s >= transition) {
        v += shift[i] * (1.0 - std::exp(-(t - t0) / array.tau_s[i]));
      }
      if (array.noise_sigma_mv > 0.0) v += array.noise_sigma_mv * noise(engine);
      rec.voltages_mv(static_cast<Eigen::Index>(s), i) = v;
    }
  }
  return rec;
}

std::vector<TransientRecording> generate_dataset(const SensorArraySpec& array,
                                                 const std::vector<LiquidProfile>& profiles,
                                                 const std::string& reference_id, int repeats,
                                                 bool randomize_order, std::uint64_t seed,
                                                 const SimulationTiming& timing) {
  if (repeats < 1) throw ArgumentError("repeats must be >= 1");
  auto ref = std::find_if(profiles.begin(), profiles.end(),
                          [&](const LiquidProfile& p) { return p.id == reference_id; });
  if (ref == profiles.end()) throw ArgumentError("unknown reference liquid '" + reference_id + "'");

  std::vector<TransientRecording> out;
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    if (profiles[p].id == reference_id) continue;
    for (int r = 0; r < repeats; ++r) {
      auto engine = make_engine(seed, p, static_cast<std::uint64_t>(r));
      out.push_back(simulate_transient(array, *ref, profiles[p], timing, engine()));
    }
  }
  if (randomize_order) {
    auto engine = make_engine(seed, 0x0D3E, 0);
    std::shuffle(out.begin(), out.end(), engine);
  }
  return out;
}

}  // namespace etongue
