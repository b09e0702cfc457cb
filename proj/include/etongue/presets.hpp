#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "etongue/signal_sim.hpp"

namespace etongue {

// One reference liquid plus the liquids tested against it on one array.
struct Experiment {
  std::string name;
  SensorArraySpec array;
  std::vector<LiquidProfile> profiles;
  std::string reference_id;
};

// Synthetic sample matrices shaped like the beverage studies: concentrations
// and labels are invented, only the structure (liquids, references, label
// tasks) follows the real experiments.
//
//   "acids"  - acetic, citric and lactic acid at 1e-5..1e-1 M, each against
//              its own 1e-3 M reference. Tasks: acid, log10_concentration.
//   "juices" - nine juices (four oranges, orange-passion fruit, pear, peach,
//              apricot, multivitamin), reference = a second batch of orange 1.
//              Tasks: juice_type, orange_flavor.
//   "wines"  - eleven red wines, reference = a second bottle of P.d.T.
//              Tasks: wine, origin, alcohol.
//   "aging"  - one orange juice stored in a fridge (reference), at room
//              temperature or at 40 C for 10-50 days. Task: acceptance, from
//              simulated 12-member panel votes.
//
// Throws ArgumentError for an unknown name.
std::vector<Experiment> preset_experiments(const std::string& name, std::uint64_t seed,
                                           double noise_sigma_mv = 0.05);

std::vector<std::string> preset_names();

struct DatasetManifest;

// Simulates `repeats` recordings of every non-reference liquid of every
// experiment, writes them as rec_NNNN.csv (+ sidecar) into `directory` and
// returns the manifest (sample_id = liquid id, tasks from class_labels).
// The manifest is also written to directory/manifest.json.
DatasetManifest simulate_to_directory(const std::vector<Experiment>& experiments,
                                      const std::filesystem::path& directory, int repeats,
                                      bool randomize_order, std::uint64_t seed,
                                      const SimulationTiming& timing = {});

}  // namespace etongue
