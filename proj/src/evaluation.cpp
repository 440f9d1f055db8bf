#include "ecgr/evaluation.hpp"

#include <cstdio>

#include "ecgr/cyclegan.hpp"
#include "ecgr/errors.hpp"

namespace ecgr {

SegmentRestorer generator_restorer(const Generator& gx2c) {
  return [&gx2c](std::span<const double> segment) -> std::vector<double> {
    FeatureMap x(1, 1, segment.size(), std::vector<double>(segment.begin(), segment.end()));
    FeatureMap y = restore_segment(gx2c, x, 1);
    return std::move(y.storage());
  };
}

std::vector<double> restore_record_signal(const Record& record, const SegmentRestorer& restorer,
                                          std::size_t passes) {
  if (passes < 1) throw InputError("restore: passes must be >= 1");
  auto segments = segment_record(record);
  for (auto& seg : segments) {
    for (std::size_t p = 0; p < passes; ++p) {
      Segment n = normalize(std::move(seg));
      if (!n.degenerate) {
        auto restored = restorer(n.samples);
        if (restored.size() != n.samples.size()) throw NumericError("restorer changed the segment length");
        n.samples = std::move(restored);
      }
      seg = denormalize(std::move(n));
    }
  }
  return stitch_segments(segments);
}

MetricsReport evaluate_signal(std::span<const double> signal, double fs, std::span<const BeatAnnotation> annotations,
                              std::string_view detector, double tolerance_ms) {
  const Detector detect = detector_by_name(detector);
  std::vector<BeatAnnotation> inside;
  std::vector<std::size_t> truth;
  for (const auto& a : annotations)
    if (a.sample_index < signal.size()) {
      inside.push_back(a);
      truth.push_back(a.sample_index);
    }
  const DetectionResult det = detect(signal, fs);
  return metrics(match_peaks(det.peaks, truth, tolerance_ms, fs), inside);
}

RestorationReport evaluate_restoration(std::span<const Record> records, const SegmentRestorer& restorer,
                                       std::string_view detector, std::size_t passes, double tolerance_ms) {
  detector_by_name(detector);  // fail before any work on a bad name
  RestorationReport report;
  std::vector<MetricsReport> originals, restoreds;
  for (const Record& rec : records) {
    const std::size_t whole = (rec.samples.size() / kSegmentLength) * kSegmentLength;
    if (whole == 0) throw InputError("record " + rec.patient_id + " is shorter than one 10 s segment");
    const std::span<const double> original(rec.samples.data(), whole);
    const auto restored = restore_record_signal(rec, restorer, passes);
    RecordEvaluation e;
    e.id = rec.patient_id;
    e.original = evaluate_signal(original, rec.sampling_rate, rec.annotations, detector, tolerance_ms);
    e.restored = evaluate_signal(restored, rec.sampling_rate, rec.annotations, detector, tolerance_ms);
    originals.push_back(e.original);
    restoreds.push_back(e.restored);
    report.records.push_back(std::move(e));
  }
  report.pooled_original = pool_reports(originals);
  report.pooled_restored = pool_reports(restoreds);
  report.mean_original = mean_reports(originals);
  report.mean_restored = mean_reports(restoreds);
  return report;
}

RestorationReport evaluate_restoration(std::span<const Record> records, const Generator& gx2c,
                                       std::string_view detector, std::size_t passes, double tolerance_ms) {
  return evaluate_restoration(records, generator_restorer(gx2c), detector, passes, tolerance_ms);
}

std::string report_csv_header() { return "variant,TP,FN,FP,recall,precision,f1,s_missed,v_missed\n"; }

std::string report_csv_row(std::string_view variant, const MetricsReport& r) {
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("NA");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  std::string row(variant);
  row += "," + std::to_string(r.tp) + "," + std::to_string(r.fn) + "," + std::to_string(r.fp) + ",";
  row += pct(r.sensitivity) + "," + pct(r.precision) + "," + pct(r.f1) + ",";
  row += std::to_string(r.s_missed) + "," + std::to_string(r.v_missed) + "\n";
  return row;
}

std::string restoration_report_csv(const RestorationReport& report, std::string_view restored_variant) {
  const std::string restored(restored_variant);
  std::string out = report_csv_header();
  out += report_csv_row("Original Signal", report.pooled_original);
  out += report_csv_row(restored, report.pooled_restored);
  out += report_csv_row("Original Signal (record mean)", report.mean_original);
  out += report_csv_row(restored + " (record mean)", report.mean_restored);
  for (const auto& e : report.records) {
    out += report_csv_row("Original Signal [" + e.id + "]", e.original);
    out += report_csv_row(restored + " [" + e.id + "]", e.restored);
  }
  return out;
}

}  // namespace ecgr
