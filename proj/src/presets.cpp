#include "etongue/presets.hpp"

#include <cmath>
#include <cstdio>

#include "etongue/error.hpp"
#include "etongue/pipeline_io.hpp"
#include "etongue/recording_io.hpp"

namespace etongue {

namespace {

LiquidProfile liquid(std::string id, const std::vector<std::string>& analytes,
                     const std::vector<double>& molar,
                     std::map<std::string, std::string> labels) {
  LiquidProfile p;
  p.id = std::move(id);
  for (std::size_t a = 0; a < analytes.size(); ++a) p.concentrations_m[analytes[a]] = molar.at(a);
  p.class_labels = std::move(labels);
  return p;
}

SensorArraySpec array_for(const std::vector<std::string>& analytes, std::uint64_t seed,
                          double noise_sigma_mv) {
  SensorArraySpec array = make_random_array(analytes, seed);
  array.noise_sigma_mv = noise_sigma_mv;
  return array;
}

std::vector<Experiment> acids(std::uint64_t seed, double noise) {
  const std::vector<std::string> analytes = {"acetic", "citric", "lactic"};
  const SensorArraySpec array = array_for(analytes, seed, noise);
  std::vector<Experiment> out;
  for (const auto& acid : analytes) {
    Experiment e;
    e.name = acid;
    e.array = array;
    e.reference_id = acid + "_reference";
    auto profile = [&](const std::string& id, double c, int log10c) {
      LiquidProfile p;
      p.id = id;
      for (const auto& a : analytes) p.concentrations_m[a] = a == acid ? c : 1e-4;
      p.class_labels = {{"acid", acid}, {"log10_concentration", std::to_string(log10c)}};
      return p;
    };
    e.profiles.push_back(profile(e.reference_id, 1e-3, -3));
    for (int log10c = -5; log10c <= -1; ++log10c) {
      e.profiles.push_back(profile(acid + "_1e" + std::to_string(log10c), std::pow(10.0, log10c),
                                   log10c));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Experiment> juices(std::uint64_t seed, double noise) {
  const std::vector<std::string> analytes = {"citric", "malic", "ascorbic", "sucrose", "potassium"};
  Experiment e;
  e.name = "juices";
  e.array = array_for(analytes, seed, noise);
  e.reference_id = "orange1_reference";
  struct Row {
    const char* id;
    std::vector<double> molar;
    const char* flavor;
  };
  const std::vector<Row> rows = {
      {"orange1", {0.045, 0.0040, 0.0025, 0.120, 0.045}, "orange"},
      {"orange2", {0.040, 0.0045, 0.0022, 0.130, 0.050}, "orange"},
      {"orange3", {0.041, 0.0046, 0.0020, 0.125, 0.052}, "orange"},
      {"orange4", {0.047, 0.0038, 0.0027, 0.115, 0.043}, "orange"},
      {"orange_passion", {0.050, 0.0050, 0.0021, 0.140, 0.048}, "other"},
      {"pear", {0.004, 0.0150, 0.0003, 0.090, 0.030}, "other"},
      {"peach", {0.008, 0.0200, 0.0005, 0.100, 0.040}, "other"},
      {"apricot", {0.010, 0.0300, 0.0006, 0.110, 0.060}, "other"},
      {"multivitamin", {0.030, 0.0120, 0.0040, 0.130, 0.040}, "other"},
  };
  e.profiles.push_back(liquid(e.reference_id, analytes, rows[0].molar, {}));
  for (const auto& r : rows) {
    e.profiles.push_back(
        liquid(r.id, analytes, r.molar, {{"juice_type", r.id}, {"orange_flavor", r.flavor}}));
  }
  return {e};
}

double ethanol_molar(double vol_percent) { return vol_percent * 10.0 * 0.789 / 46.07; }

std::vector<Experiment> wines(std::uint64_t seed, double noise) {
  const std::vector<std::string> analytes = {"tartaric", "malic",  "lactic",
                                             "ethanol",  "tannin", "potassium"};
  Experiment e;
  e.name = "wines";
  e.array = array_for(analytes, seed, noise);
  e.reference_id = "pdt_reference";
  struct Row {
    const char* id;
    const char* origin;
    double vol;
    double tartaric, malic, lactic, tannin, potassium;
  };
  const std::vector<Row> rows = {
      {"valpolicella", "Veneto", 12.5, 0.021, 0.011, 0.014, 0.0018, 0.024},
      {"profasio", "Veneto", 13.0, 0.019, 0.010, 0.016, 0.0021, 0.026},
      {"pdt", "Veneto", 13.5, 0.020, 0.009, 0.015, 0.0020, 0.025},
      {"amarone", "Veneto", 15.5, 0.018, 0.008, 0.017, 0.0026, 0.027},
      {"barbera", "Piedmont", 13.5, 0.032, 0.020, 0.007, 0.0024, 0.019},
      {"barolo", "Piedmont", 14.5, 0.029, 0.016, 0.009, 0.0034, 0.021},
      {"nebbiolo", "Piedmont", 14.0, 0.030, 0.017, 0.008, 0.0031, 0.020},
      {"chianti", "Tuscany", 13.0, 0.026, 0.007, 0.019, 0.0026, 0.029},
      {"brunello", "Tuscany", 14.5, 0.024, 0.006, 0.021, 0.0030, 0.031},
      {"nero_davola", "Other", 14.0, 0.015, 0.004, 0.025, 0.0022, 0.035},
      {"schiava", "Other", 12.5, 0.035, 0.022, 0.005, 0.0012, 0.018},
  };
  auto molar = [&](const Row& r) {
    return std::vector<double>{r.tartaric, r.malic, r.lactic, ethanol_molar(r.vol), r.tannin,
                               r.potassium};
  };
  e.profiles.push_back(liquid(e.reference_id, analytes, molar(rows[2]), {}));
  for (const auto& r : rows) {
    e.profiles.push_back(liquid(r.id, analytes, molar(r),
                                {{"wine", r.id}, {"origin", r.origin}, {"alcohol", alcohol_label(r.vol)}}));
  }
  return {e};
}

std::vector<Experiment> aging(std::uint64_t seed, double noise) {
  const std::vector<std::string> analytes = {"ascorbic", "hmf", "citric", "sucrose"};
  Experiment e;
  e.name = "aging";
  e.array = array_for(analytes, seed, noise);
  e.reference_id = "fridge_reference";
  // Degradation extent in room-temperature day equivalents.
  auto juice = [&](const std::string& id, double extent, int yes_votes) {
    const std::vector<double> molar = {0.0025 * std::exp(-0.01 * extent), 1e-6 * (1.0 + 0.5 * extent),
                                       0.045, 0.12 * std::exp(-0.001 * extent)};
    std::map<std::string, std::string> labels;
    if (yes_votes >= 0) labels["acceptance"] = purchase_label(yes_votes, 12);
    return liquid(id, analytes, molar, std::move(labels));
  };
  e.profiles.push_back(juice(e.reference_id, 0.0, -1));
  e.profiles.push_back(juice("fridge", 0.0, 9));
  const int room_votes[] = {9, 8, 7, 3};
  const int hot_votes[] = {6, 4, 2, 1};
  const int days[] = {10, 20, 40, 50};
  for (int i = 0; i < 4; ++i) {
    e.profiles.push_back(juice("room_" + std::to_string(days[i]) + "d", days[i], room_votes[i]));
  }
  for (int i = 0; i < 4; ++i) {
    e.profiles.push_back(juice("c40_" + std::to_string(days[i]) + "d", 6.0 * days[i], hot_votes[i]));
  }
  return {e};
}

}  // namespace

std::vector<std::string> preset_names() { return {"acids", "juices", "wines", "aging"}; }

std::vector<Experiment> preset_experiments(const std::string& name, std::uint64_t seed,
                                           double noise_sigma_mv) {
  if (name == "acids") return acids(seed, noise_sigma_mv);
  if (name == "juices") return juices(seed, noise_sigma_mv);
  if (name == "wines") return wines(seed, noise_sigma_mv);
  if (name == "aging") return aging(seed, noise_sigma_mv);
  throw ArgumentError("unknown preset '" + name + "'");
}

DatasetManifest simulate_to_directory(const std::vector<Experiment>& experiments,
                                      const std::filesystem::path& directory, int repeats,
                                      bool randomize_order, std::uint64_t seed,
                                      const SimulationTiming& timing) {
  DatasetManifest manifest;
  manifest.base_dir = directory;
  manifest.notes = "synthetic recordings";
  int counter = 0;
  for (std::size_t x = 0; x < experiments.size(); ++x) {
    const Experiment& e = experiments[x];
    const auto recordings = generate_dataset(e.array, e.profiles, e.reference_id, repeats,
                                             randomize_order, seed + x, timing);
    for (const auto& p : e.profiles) {
      if (p.id == e.reference_id) continue;
      for (const auto& [task, label] : p.class_labels) manifest.tasks[task][p.id] = label;
    }
    for (const auto& rec : recordings) {
      char name[32];
      std::snprintf(name, sizeof(name), "rec_%04d.csv", ++counter);
      write_recording(rec, directory / name);
      manifest.recordings.push_back({name, rec.test_liquid_id, rec.reference_liquid_id, {}, {}});
    }
  }
  save_manifest(manifest, directory / "manifest.json");
  return manifest;
}

}  // namespace etongue
