#include "ecgr/plot.hpp"

#include <algorithm>
#include <cstdio>

#include "ecgr/errors.hpp"
#include "ecgr/record_io.hpp"

namespace ecgr {

namespace {

constexpr double kWidth = 1200.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 40.0;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

PlotData plot_segment(const Record& input, const Record* restored, std::size_t index) {
  const std::size_t count = input.samples.size() / kSegmentLength;
  if (index >= count)
    throw InputError("segment index " + std::to_string(index) + " out of range (record " + input.patient_id +
                     " has " + std::to_string(count) + " whole segments)");
  const std::size_t start = index * kSegmentLength;
  PlotData d;
  d.title = input.patient_id + " segment " + std::to_string(index);
  d.original.assign(input.samples.begin() + static_cast<std::ptrdiff_t>(start),
                    input.samples.begin() + static_cast<std::ptrdiff_t>(start + kSegmentLength));
  if (restored) {
    if (restored->samples.size() < start + kSegmentLength)
      throw InputError("restored record " + restored->patient_id + " has no segment " + std::to_string(index));
    d.restored.emplace(restored->samples.begin() + static_cast<std::ptrdiff_t>(start),
                       restored->samples.begin() + static_cast<std::ptrdiff_t>(start + kSegmentLength));
  }
  for (const auto& a : input.annotations)
    if (a.sample_index >= start && a.sample_index < start + kSegmentLength)
      d.annotations.push_back({a.sample_index - start, a.label});
  return d;
}

std::string render_svg(const PlotData& data) {
  const std::size_t n = data.original.size();
  if (n < 2) throw InputError("render_svg: need at least two samples");
  if (data.restored && data.restored->size() != n) throw InputError("render_svg: restored length differs");
  double lo = *std::min_element(data.original.begin(), data.original.end());
  double hi = *std::max_element(data.original.begin(), data.original.end());
  if (data.restored) {
    lo = std::min(lo, *std::min_element(data.restored->begin(), data.restored->end()));
    hi = std::max(hi, *std::max_element(data.restored->begin(), data.restored->end()));
  }
  if (hi == lo) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto px = [&](std::size_t i) { return kMargin + (kWidth - 2 * kMargin) * static_cast<double>(i) / static_cast<double>(n - 1); };
  auto py = [&](double v) { return kHeight - kMargin - (kHeight - 2 * kMargin) * (v - lo) / (hi - lo); };

  auto polyline = [&](const std::vector<double>& y, const char* colour) {
    std::string s = "<polyline fill=\"none\" stroke=\"";
    s += colour;
    s += "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += fixed(px(i)) + "," + fixed(py(y[i]));
    }
    s += "\"/>\n";
    return s;
  };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth) + "\" height=\"" +
                    fixed(kHeight) + "\" viewBox=\"0 0 " + fixed(kWidth) + " " + fixed(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed(kMargin) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape(data.title) + "</text>\n";
  svg += "<rect x=\"" + fixed(kMargin) + "\" y=\"" + fixed(kMargin) + "\" width=\"" + fixed(kWidth - 2 * kMargin) +
         "\" height=\"" + fixed(kHeight - 2 * kMargin) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  svg += polyline(data.original, "#808080");
  if (data.restored) svg += polyline(*data.restored, "#d62728");
  for (const auto& a : data.annotations) {
    if (a.label == BeatLabel::N || a.sample_index >= n) continue;
    const double x = px(a.sample_index);
    const double y = py(data.original[a.sample_index]);
    const char* colour = a.label == BeatLabel::S ? "#1f77b4" : "#2ca02c";
    svg += "<circle class=\"beat-" + std::string(1, to_char(a.label)) + "\" cx=\"" + fixed(x) + "\" cy=\"" +
           fixed(y) + "\" r=\"4\" fill=\"none\" stroke=\"" + colour + "\"/>\n";
    svg += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(kMargin - 4) + "\" font-family=\"sans-serif\" font-size=\"12\" "
           "text-anchor=\"middle\" fill=\"" + colour + "\">" + std::string(1, to_char(a.label)) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string plot_values_csv(const PlotData& data) {
  std::vector<char> labels(data.original.size(), 0);
  for (const auto& a : data.annotations)
    if (a.sample_index < labels.size()) labels[a.sample_index] = to_char(a.label);
  std::string out = "sample_index,original_mv,restored_mv,label\n";
  for (std::size_t i = 0; i < data.original.size(); ++i) {
    out += std::to_string(i) + "," + format_double(data.original[i]) + ",";
    if (data.restored) out += format_double((*data.restored)[i]);
    out += ",";
    if (labels[i]) out += labels[i];
    out += "\n";
  }
  return out;
}

}  // namespace ecgr
