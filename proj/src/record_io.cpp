#include "ecgr/record_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ecgr/errors.hpp"

namespace fs = std::filesystem;

namespace ecgr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    lines.push_back(trim(text.substr(pos, eol - pos)));
    pos = eol + 1;
  }
  return lines;
}

template <typename T>
T parse_field(std::string_view field, const std::string& origin, std::size_t line) {
  field = trim(field);
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
    throw InputError(origin + ":" + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
  return v;
}

constexpr const char* kSamplesHeader = "sample_index,value_mv";
constexpr const char* kAnnotationsHeader = "sample_index,label";

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t n = 0;
  for (auto line : split_lines(text)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError("line " + std::to_string(n) + ": expected key=value, got '" + std::string(line) + "'");
    kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> parse_samples_csv(std::string_view text, const std::string& origin) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kSamplesHeader)
    throw InputError(origin + ": expected header '" + kSamplesHeader + "'");
  std::vector<double> samples;
  samples.reserve(lines.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto comma = lines[i].find(',');
    if (comma == std::string_view::npos) throw InputError(origin + ":" + std::to_string(i + 1) + ": missing column");
    const auto idx = parse_field<std::size_t>(lines[i].substr(0, comma), origin, i + 1);
    if (idx != samples.size())
      throw InputError(origin + ":" + std::to_string(i + 1) + ": sample_index " + std::to_string(idx) +
                       " out of sequence");
    samples.push_back(parse_field<double>(lines[i].substr(comma + 1), origin, i + 1));
  }
  return samples;
}

std::string format_samples_csv(std::span<const double> samples) {
  std::string out = std::string(kSamplesHeader) + "\n";
  out.reserve(samples.size() * 24);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(samples[i]);
    out += '\n';
  }
  return out;
}

std::vector<BeatAnnotation> parse_annotations_csv(std::string_view text, const std::string& origin) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kAnnotationsHeader)
    throw InputError(origin + ": expected header '" + kAnnotationsHeader + "'");
  std::vector<BeatAnnotation> anns;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto comma = lines[i].find(',');
    if (comma == std::string_view::npos) throw InputError(origin + ":" + std::to_string(i + 1) + ": missing column");
    anns.push_back({parse_field<std::size_t>(lines[i].substr(0, comma), origin, i + 1),
                    parse_beat_label(trim(lines[i].substr(comma + 1)))});
  }
  return anns;
}

std::string format_annotations_csv(std::span<const BeatAnnotation> annotations) {
  std::string out = std::string(kAnnotationsHeader) + "\n";
  for (const auto& a : annotations) {
    out += std::to_string(a.sample_index);
    out += ',';
    out += to_char(a.label);
    out += '\n';
  }
  return out;
}

void write_record(const fs::path& dir, const Record& record) {
  record.validate();
  if (record.patient_id.empty() || record.patient_id.find_first_of("/\\") != std::string::npos)
    throw InputError("record id '" + record.patient_id + "' is not a valid file stem");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::string id = record.patient_id;
  write_text_file(dir / (id + ".csv"), format_samples_csv(record.samples));
  write_text_file(dir / (id + ".ann.csv"), format_annotations_csv(record.annotations));
  KeyValues kv{{"id", id},
               {"sampling_rate_hz", format_double(record.sampling_rate)},
               {"samples", id + ".csv"},
               {"annotations", id + ".ann.csv"},
               {"quality", std::string(to_string(record.quality))}};
  write_text_file(dir / (id + ".manifest"), format_key_values(kv));
}

Record read_record(const fs::path& path) {
  const std::string name = path.filename().string();
  std::string id;
  auto ends_with = [&](std::string_view suffix) {
    return name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".ann.csv")) throw InputError(path.string() + " is an annotation file, not a record");
  if (ends_with(".manifest")) id = name.substr(0, name.size() - 9);
  else if (ends_with(".csv")) id = name.substr(0, name.size() - 4);
  else throw InputError(path.string() + ": expected <id>.csv or <id>.manifest");

  const fs::path dir = path.parent_path();
  const fs::path manifest_path = dir / (id + ".manifest");
  if (!fs::exists(manifest_path))
    throw InputError("record " + id + ": missing manifest " + manifest_path.string() + " (declares the sampling rate)");
  const KeyValues kv = parse_key_values(read_text_file(manifest_path));

  Record rec;
  rec.patient_id = kv.contains("id") ? kv.at("id") : id;
  const auto rate = kv.find("sampling_rate_hz");
  if (rate == kv.end()) throw InputError(manifest_path.string() + ": sampling_rate_hz missing");
  rec.sampling_rate = parse_field<double>(rate->second, manifest_path.string(), 0);
  if (const auto q = kv.find("quality"); q != kv.end()) rec.quality = parse_quality(q->second);

  const std::string samples_name = kv.contains("samples") ? kv.at("samples") : id + ".csv";
  rec.samples = parse_samples_csv(read_text_file(dir / samples_name), (dir / samples_name).string());
  const std::string ann_name = kv.contains("annotations") ? kv.at("annotations") : id + ".ann.csv";
  if (fs::exists(dir / ann_name))
    rec.annotations = parse_annotations_csv(read_text_file(dir / ann_name), (dir / ann_name).string());
  rec.validate();
  return rec;
}

std::vector<Record> read_record_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  std::vector<fs::path> manifests;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".manifest") manifests.push_back(entry.path());
  std::sort(manifests.begin(), manifests.end());
  std::vector<Record> out;
  out.reserve(manifests.size());
  for (const auto& m : manifests) out.push_back(read_record(m));
  return out;
}

std::vector<Record> read_records(const fs::path& path) {
  if (fs::is_directory(path)) return read_record_dir(path);
  if (!fs::exists(path)) throw InputError(path.string() + " does not exist");
  return {read_record(path)};
}

}  // namespace ecgr
