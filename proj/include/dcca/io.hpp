#pragma once

#include "dcca/deep_cca.hpp"
#include "dcca/deep_mcca.hpp"
#include "dcca/linear_cca.hpp"
#include "dcca/mcca.hpp"
#include "dcca/signal.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace dcca {

enum class DataFormat { csv, raw_f64 };

DataFormat parse_format(const std::string& s);
std::string to_string(DataFormat f);

// Sidecar written next to data files: <path>.meta.json.
std::filesystem::path sidecar_path(const std::filesystem::path& path);

// CSV: header of channel names, one row per sample, '.' decimals. The
// sampling rate comes from the sidecar when present, else `default_fs`.
// raw-f64: little-endian doubles, row-major, sidecar {rows, cols, fs_hz, labels}.
TimeSeries ingest(const std::filesystem::path& path, DataFormat format, double default_fs = 0.0);

// Writes the data file and its sidecar. Numbers use the shortest
// round-trip representation, so write-then-ingest is bit-exact.
void write_series(const std::filesystem::path& path, const TimeSeries& ts, DataFormat format);

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LinearCcaModel& m);
LinearCcaModel linear_cca_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MccaModel& m);
MccaModel mcca_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DenseNetwork& net);
DenseNetwork network_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DccaModel& m);
nlohmann::json to_json(const DmccaModel& m);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace dcca
