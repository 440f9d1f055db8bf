#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecgr {

inline constexpr double kSamplingRateHz = 400.0;
inline constexpr std::size_t kSegmentLength = 4000;  // 10 s at 400 Hz

enum class BeatLabel { N, S, V };
enum class Quality { clean, corrupted, unknown };

char to_char(BeatLabel label);
BeatLabel parse_beat_label(std::string_view text);
std::string_view to_string(Quality q);
Quality parse_quality(std::string_view text);

struct BeatAnnotation {
  std::size_t sample_index = 0;
  BeatLabel label = BeatLabel::N;
  friend bool operator==(const BeatAnnotation&, const BeatAnnotation&) = default;
};

struct Record {
  std::string patient_id;
  double sampling_rate = kSamplingRateHz;
  std::vector<double> samples;  // millivolts
  std::vector<BeatAnnotation> annotations;
  Quality quality = Quality::unknown;

  // Throws InputError unless annotations are strictly increasing and in range.
  void validate() const;
};

struct Segment {
  std::vector<double> samples;
  std::string source_id;
  std::size_t start_index = 0;
  std::vector<BeatAnnotation> annotations;  // indices relative to the segment
  Quality quality = Quality::unknown;
  bool normalized = false;
  bool degenerate = false;  // constant input; normalized form is all zeros
  double norm_min = 0.0;
  double norm_max = 0.0;

  bool has_arrhythmia() const;
};

// Maps the segment linearly onto [-1, 1] (min -> -1, max -> +1) and keeps the
// extremes for denormalize. A constant segment becomes all zeros, flagged degenerate.
Segment normalize(Segment segment);
// Inverse of normalize; a degenerate segment comes back as the constant norm_min.
Segment denormalize(Segment segment);

// Consecutive non-overlapping 10 s windows; the remainder is dropped.
std::vector<Segment> segment_record(const Record& record);

// Reassembles segments (in order) into one signal.
std::vector<double> stitch_segments(std::span<const Segment> segments);

struct SynthOptions {
  double amplitude_mv = 1.0;   // R-wave height of a normal beat
  double sampling_rate = kSamplingRateHz;
  std::string patient_id = "synthetic";
};

// Sum-of-Gaussians (P, Q, R, S, T) beats at a constant rate; beat i takes
// script[i] (N when the script runs out). S beats come early with a narrow
// QRS and a flattened P; V beats come early, wide and large, with no P and a
// compensatory pause. Annotations are the exact R sample indices.
Record synth_ecg(double heart_rate_bpm, double duration_s, std::span<const BeatLabel> beat_script = {},
                 const SynthOptions& options = {});

struct CutInterval {
  std::size_t start = 0;
  std::size_t length = 0;
  double fill = 0.0;
  friend bool operator==(const CutInterval&, const CutInterval&) = default;
};

struct ArtifactSpec {
  std::optional<double> noise_snr_db;  // additive white Gaussian noise vs clean signal power
  double wander_amplitude_mv = 0.0;
  double wander_frequency_hz = 0.3;
  std::vector<CutInterval> cuts;
  double qrs_attenuation = 1.0;         // factor applied +-60 ms around annotated R-peaks
  std::size_t motion_bursts = 0;
  double motion_amplitude_mv = 0.0;
  double motion_duration_s = 0.5;
  double motion_frequency_hz = 4.0;

  // Throws ConfigError; segment_length bounds the cuts when non-zero.
  void validate(std::size_t segment_length = 0) const;
  friend bool operator==(const ArtifactSpec&, const ArtifactSpec&) = default;
};

// Flat "key = value" text with the ArtifactSpec field names; cuts are
// "start:length:fill" items separated by ';'. '#' starts a comment.
ArtifactSpec parse_artifact_spec(std::string_view text);
std::string format_artifact_spec(const ArtifactSpec& spec);

// Order: QRS attenuation, baseline wander, noise, motion bursts, cuts.
// Deterministic under seed; tags the result corrupted.
Segment inject_artifacts(const Segment& segment, const ArtifactSpec& spec, std::uint64_t seed);

struct TrainingPools {
  std::vector<Segment> clean;
  std::vector<Segment> corrupted;
  double clean_arrhythmia_fraction = 0.0;
  double corrupted_arrhythmia_fraction = 0.0;
};

// Draws `size` segments per quality tag so that round(fraction * size) of
// them contain an S or V beat. Throws InputError when a stratum is short,
// unless allow_shortfall is set (then the pool takes what exists).
TrainingPools compose_training_set(std::span<const Segment> segments, double target_arrhythmia_fraction,
                                   std::size_t size, std::uint64_t seed, bool allow_shortfall = false);

struct CorpusOptions {
  std::size_t count = 100;
  double bpm_min = 60.0;
  double bpm_max = 60.0;              // heart rate drawn uniformly per record
  double duration_s = 10.0;
  double arrhythmia_fraction = 0.334;  // records holding one S or V beat
  double amplitude_min_mv = 0.8;
  double amplitude_max_mv = 1.3;
  ArtifactSpec artifacts;
  double random_cut_s = 0.0;           // one extra cut of this length at a random place; 0 disables
  std::uint64_t seed = 1;
  std::string id_prefix = "synth";
};

// Paired corpora: corrupted[i] is clean[i] with the artifacts applied.
struct SyntheticCorpus {
  std::vector<Record> clean;
  std::vector<Record> corrupted;
};

SyntheticCorpus make_synthetic_corpus(const CorpusOptions& options);

// 10 log10(sum ref^2 / sum (est - ref)^2) on mean-removed signals.
double snr_db(std::span<const double> reference, std::span<const double> estimate);

}  // namespace ecgr
