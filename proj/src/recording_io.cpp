#include "etongue/recording_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "etongue/error.hpp"

namespace etongue {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw DataError("cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_recording(const TransientRecording& rec, const fs::path& csv_path) {
  rec.validate();
  std::string text = "t_s";
  for (int c = 1; c <= kChannels; ++c) {
    text += c < 10 ? ",ch0" : ",ch";
    text += std::to_string(c);
  }
  text += '\n';
  for (Eigen::Index s = 0; s < rec.voltages_mv.rows(); ++s) {
    text += format_double(rec.time_s(static_cast<std::size_t>(s)));
    for (int c = 0; c < kChannels; ++c) {
      text += ',';
      text += format_double(rec.voltages_mv(s, c));
    }
    text += '\n';
  }
  write_text_file(csv_path, text);

  json side = recording_to_json(rec);
  side.erase("voltages_mv");
  write_text_file(sidecar_path(csv_path), side.dump(2) + "\n");
}

namespace {

template <typename T>
T required(const json& doc, const char* key, const char* what) {
  if (!doc.contains(key)) throw ValidationError(std::string(what) + ": missing field '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string(what) + ": field '" + key + "' has the wrong type");
  }
}

void fill_metadata(const json& doc, TransientRecording& rec, const char* what) {
  if (!doc.is_object()) throw ValidationError(std::string(what) + ": expected a JSON object");
  rec.sample_rate_hz = required<double>(doc, "sample_rate_hz", what);
  const auto index = required<long long>(doc, "transition_index", what);
  if (index < 0) throw ValidationError(std::string(what) + ": transition_index must be >= 0");
  rec.transition_index = static_cast<std::size_t>(index);
  rec.reference_liquid_id = required<std::string>(doc, "reference_liquid_id", what);
  rec.test_liquid_id = required<std::string>(doc, "test_liquid_id", what);
}

}  // namespace

TransientRecording read_recording(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open recording " + csv_path.string());
  const fs::path side = sidecar_path(csv_path);
  if (!fs::exists(side)) throw IoError("missing recording sidecar " + side.string());

  TransientRecording rec;
  try {
    fill_metadata(read_json_file(side), rec, side.string().c_str());
  } catch (const ValidationError& e) {
    throw RecordingError(e.what());
  }

  std::string line;
  if (!std::getline(in, line)) throw RecordingError("empty recording " + csv_path.string());
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::size_t fields = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
      // Column 0 is the time stamp, implied by the sample rate.
      if (fields > 0) values.push_back(parse_double(cell));
      ++fields;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields != kChannels + 1) {
      throw RecordingError(csv_path.string() + ": row " + std::to_string(rows + 1) + " has " +
                           std::to_string(fields) + " fields, expected 16");
    }
    ++rows;
  }
  rec.voltages_mv = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(rows), kChannels);
  rec.validate();
  return rec;
}

json recording_to_json(const TransientRecording& rec) {
  json doc;
  doc["sample_rate_hz"] = rec.sample_rate_hz;
  doc["transition_index"] = rec.transition_index;
  doc["n_samples"] = rec.n_samples();
  doc["reference_liquid_id"] = rec.reference_liquid_id;
  doc["test_liquid_id"] = rec.test_liquid_id;
  json rows = json::array();
  for (Eigen::Index s = 0; s < rec.voltages_mv.rows(); ++s) {
    json row = json::array();
    for (Eigen::Index c = 0; c < rec.voltages_mv.cols(); ++c) row.push_back(rec.voltages_mv(s, c));
    rows.push_back(std::move(row));
  }
  doc["voltages_mv"] = std::move(rows);
  return doc;
}

TransientRecording recording_from_json(const json& doc) {
  TransientRecording rec;
  fill_metadata(doc, rec, "recording");
  if (!doc.contains("voltages_mv") || !doc["voltages_mv"].is_array()) {
    throw ValidationError("recording: 'voltages_mv' must be an array of rows");
  }
  const json& rows = doc["voltages_mv"];
  rec.voltages_mv.resize(static_cast<Eigen::Index>(rows.size()), kChannels);
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const json& row = rows[s];
    if (!row.is_array() || row.size() != kChannels) {
      throw ValidationError("recording: row " + std::to_string(s) + " must hold 15 values");
    }
    for (int c = 0; c < kChannels; ++c) {
      if (!row[c].is_number()) {
        throw ValidationError("recording: non-numeric value at row " + std::to_string(s));
      }
      rec.voltages_mv(static_cast<Eigen::Index>(s), c) = row[c].get<double>();
    }
  }
  try {
    rec.validate();
  } catch (const Error& e) {
    throw ValidationError(std::string("recording: ") + e.what());
  }
  return rec;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& doc, const char* key) {
  const auto values = required<std::vector<double>>(doc, key, "sensor array");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json array_to_json(const SensorArraySpec& array) {
  json doc;
  doc["n_electrodes"] = kElectrodes;
  doc["n_channels"] = kChannels;
  doc["analytes"] = array.analytes;
  json rows = json::array();
  for (Eigen::Index i = 0; i < array.cross_sensitivity.rows(); ++i) {
    rows.push_back(vector_to_json(array.cross_sensitivity.row(i).transpose()));
  }
  doc["cross_sensitivity_mv_per_decade"] = std::move(rows);
  doc["tau_s"] = vector_to_json(array.tau_s);
  doc["baseline_mv"] = vector_to_json(array.baseline_mv);
  doc["drift_mv_per_s"] = vector_to_json(array.drift_mv_per_s);
  doc["noise_sigma_mv"] = array.noise_sigma_mv;
  return doc;
}

SensorArraySpec array_from_json(const json& doc) {
  try {
    SensorArraySpec array;
    array.analytes = required<std::vector<std::string>>(doc, "analytes", "sensor array");
    const auto rows =
        required<std::vector<std::vector<double>>>(doc, "cross_sensitivity_mv_per_decade",
                                                   "sensor array");
    array.cross_sensitivity.resize(static_cast<Eigen::Index>(rows.size()),
                                   static_cast<Eigen::Index>(array.analytes.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != array.analytes.size()) {
        throw ConfigurationError("cross_sensitivity row " + std::to_string(i) +
                                 " does not match the analyte count");
      }
      for (std::size_t a = 0; a < rows[i].size(); ++a) {
        array.cross_sensitivity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) =
            rows[i][a];
      }
    }
    array.tau_s = vector_from_json(doc, "tau_s");
    array.baseline_mv = vector_from_json(doc, "baseline_mv");
    array.drift_mv_per_s = doc.contains("drift_mv_per_s") ? vector_from_json(doc, "drift_mv_per_s")
                                                           : Eigen::VectorXd::Zero(kChannels);
    array.noise_sigma_mv = doc.value("noise_sigma_mv", 0.0);
    array.validate();
    return array;
  } catch (const ValidationError& e) {
    throw ConfigurationError(e.what());
  }
}

json profile_to_json(const LiquidProfile& profile) {
  json doc;
  doc["id"] = profile.id;
  doc["analyte_concentrations_m"] = profile.concentrations_m;
  doc["class_labels"] = profile.class_labels;
  return doc;
}

LiquidProfile profile_from_json(const json& doc) {
  try {
    LiquidProfile p;
    p.id = required<std::string>(doc, "id", "liquid profile");
    p.concentrations_m = required<std::map<std::string, double>>(doc, "analyte_concentrations_m",
                                                                 "liquid profile");
    if (doc.contains("class_labels")) {
      p.class_labels = required<std::map<std::string, std::string>>(doc, "class_labels",
                                                                    "liquid profile");
    }
    for (const auto& [analyte, c] : p.concentrations_m) {
      if (!(c > 0.0)) {
        throw ConfigurationError("liquid '" + p.id + "': concentration of '" + analyte +
                                 "' must be > 0");
      }
    }
    return p;
  } catch (const ValidationError& e) {
    throw ConfigurationError(e.what());
  }
}

}  // namespace etongue
