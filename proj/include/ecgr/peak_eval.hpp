#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecgr/ecg_data.hpp"

namespace ecgr {

struct DetectionResult {
  std::vector<std::size_t> peaks;  // strictly increasing
  std::string detector;
};

// Both detectors share the front end: 5-15 Hz band-pass built from two
// moving-average stages (zero-phase, so no delay bookkeeping). Detections
// are refined to the raw signal maximum within +-40 ms.
struct PanTompkinsParams {
  double integration_window_s = 0.150;
  double refractory_s = 0.200;
  double t_wave_window_s = 0.360;
  double search_back_factor = 1.66;
  double learning_period_s = 2.0;
  double refine_window_s = 0.040;
};

struct HamiltonParams {
  double average_window_s = 0.080;
  double refractory_s = 0.300;
  double t_wave_window_s = 0.360;
  double threshold_coefficient = 0.3125;
  double search_back_factor = 1.5;
  std::size_t history = 8;  // peaks kept for the medians
  double refine_window_s = 0.040;
};

// Throws ConfigError for fs != 400 and InputError for signals under 2 s.
DetectionResult detect_pan_tompkins(std::span<const double> signal, double fs,
                                    const PanTompkinsParams& params = {});
DetectionResult detect_hamilton(std::span<const double> signal, double fs, const HamiltonParams& params = {});

// Refractory period of a detector in samples at fs.
std::size_t detector_refractory_samples(std::string_view name, double fs);

using Detector = DetectionResult (*)(std::span<const double>, double);
// "pan-tompkins" or "hamilton"; throws ConfigError otherwise.
Detector detector_by_name(std::string_view name);

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (truth sample, detected sample)
  std::vector<std::size_t> missed;                          // positions in the truth list
};

std::size_t tolerance_samples(double tolerance_ms, double fs);

// Greedy in truth order: each truth peak takes the nearest unmatched
// detection within floor(tolerance_ms * fs / 1000) samples (earlier wins a tie).
MatchResult match_peaks(std::span<const std::size_t> detected, std::span<const std::size_t> truth,
                        double tolerance_ms = 75.0, double fs = kSamplingRateHz);

// Percentages. A ratio with a zero denominator is undefined (nullopt); F1 is
// undefined when either ratio is, and 0 when both are defined but TP = 0.
struct MetricsReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::optional<double> precision;
  std::optional<double> sensitivity;
  std::optional<double> f1;
  std::size_t s_missed = 0;
  std::size_t v_missed = 0;
};

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
// annotations[i] labels truth peak i of the match.
MetricsReport metrics(const MatchResult& match, std::span<const BeatAnnotation> annotations);

// Sums the counts and recomputes the ratios.
MetricsReport pool_reports(std::span<const MetricsReport> reports);
// Summed counts; ratios averaged over the reports where they are defined.
MetricsReport mean_reports(std::span<const MetricsReport> reports);

}  // namespace ecgr
