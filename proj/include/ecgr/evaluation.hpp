#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgr/ecg_data.hpp"
#include "ecgr/models.hpp"
#include "ecgr/peak_eval.hpp"

namespace ecgr {

// Maps one normalized segment to its restored (still normalized) version.
using SegmentRestorer = std::function<std::vector<double>(std::span<const double>)>;

// One GX2C pass.
SegmentRestorer generator_restorer(const Generator& gx2c);

// Each pass is segment -> normalize -> restore -> denormalize, so two passes
// equal restoring the restored record again. Segments are stitched back; the
// tail that does not fill a whole segment is dropped.
std::vector<double> restore_record_signal(const Record& record, const SegmentRestorer& restorer,
                                          std::size_t passes = 1);

// Detects on `signal`, matches against the annotations that fall inside it.
MetricsReport evaluate_signal(std::span<const double> signal, double fs, std::span<const BeatAnnotation> annotations,
                              std::string_view detector, double tolerance_ms = 75.0);

struct RecordEvaluation {
  std::string id;
  MetricsReport original;
  MetricsReport restored;
};

struct RestorationReport {
  std::vector<RecordEvaluation> records;
  MetricsReport pooled_original;
  MetricsReport pooled_restored;
  MetricsReport mean_original;  // per-record average of the ratios
  MetricsReport mean_restored;
};

// Original and restored signals are both cut to whole segments so they are
// scored against the same truth.
RestorationReport evaluate_restoration(std::span<const Record> records, const SegmentRestorer& restorer,
                                       std::string_view detector, std::size_t passes = 1,
                                       double tolerance_ms = 75.0);
RestorationReport evaluate_restoration(std::span<const Record> records, const Generator& gx2c,
                                       std::string_view detector, std::size_t passes, double tolerance_ms = 75.0);

// variant,TP,FN,FP,recall,precision,f1,s_missed,v_missed; undefined ratios print as NA.
std::string report_csv_header();
std::string report_csv_row(std::string_view variant, const MetricsReport& r);
std::string restoration_report_csv(const RestorationReport& report, std::string_view restored_variant);

}  // namespace ecgr
