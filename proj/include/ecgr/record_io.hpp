#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecgr/ecg_data.hpp"

namespace ecgr {

// On-disk layout of one record `<id>` inside a directory:
//   <id>.csv           sample_index,value_mv
//   <id>.ann.csv       sample_index,label        (optional on read)
//   <id>.manifest      key=value: id, sampling_rate_hz, samples, annotations, quality

// Shortest round-trip decimal form; the same double always prints the same way.
std::string format_double(double v);

using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::vector<double> parse_samples_csv(std::string_view text, const std::string& origin);
std::string format_samples_csv(std::span<const double> samples);
std::vector<BeatAnnotation> parse_annotations_csv(std::string_view text, const std::string& origin);
std::string format_annotations_csv(std::span<const BeatAnnotation> annotations);

void write_record(const std::filesystem::path& dir, const Record& record);

// `path` is either the samples CSV or the manifest of a record. The
// sampling rate must be declared in the manifest.
Record read_record(const std::filesystem::path& path);

// Every record in a directory, sorted by id.
std::vector<Record> read_record_dir(const std::filesystem::path& dir);

// A file reads as one record, a directory as all of its records.
std::vector<Record> read_records(const std::filesystem::path& path);

}  // namespace ecgr
