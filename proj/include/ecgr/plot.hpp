#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ecgr/ecg_data.hpp"

namespace ecgr {

struct PlotData {
  std::string title;
  std::vector<double> original;
  std::optional<std::vector<double>> restored;  // same length as original
  std::vector<BeatAnnotation> annotations;      // relative to the plotted window
};

// Segment `index` of a record (and of its restored version). Throws
// InputError when the index is past the last whole segment.
PlotData plot_segment(const Record& input, const Record* restored, std::size_t index);

// Static overlay: original in grey, restored in red, S/V beats marked and labelled.
std::string render_svg(const PlotData& data);
// sample_index,original_mv,restored_mv,label (one row per plotted sample).
std::string plot_values_csv(const PlotData& data);

}  // namespace ecgr
