#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "etongue/signal_sim.hpp"

namespace etongue {

// Recording on disk: `<stem>.csv` with header `t_s,ch01,...,ch15` plus a
// `<stem>.json` sidecar holding sample_rate_hz, transition_index and the
// reference/test liquid ids. Numbers use the shortest round-trip decimal
// form, so write -> read is bit-exact.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);
void write_recording(const TransientRecording& rec, const std::filesystem::path& csv_path);
// Throws IoError naming the path when a file is missing or unreadable, and
// RecordingError/DataError when the content is malformed.
TransientRecording read_recording(const std::filesystem::path& csv_path);

// Wire form used by the inference service: the sidecar fields plus
// `voltages_mv` as an array of 15-element rows.
nlohmann::json recording_to_json(const TransientRecording& rec);
// Throws ValidationError describing the first malformed field.
TransientRecording recording_from_json(const nlohmann::json& doc);

nlohmann::json array_to_json(const SensorArraySpec& array);
SensorArraySpec array_from_json(const nlohmann::json& doc);
nlohmann::json profile_to_json(const LiquidProfile& profile);
LiquidProfile profile_from_json(const nlohmann::json& doc);

// Shortest decimal that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace etongue
