#include "ecgr/ecg_data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ecgr/errors.hpp"

namespace ecgr {

char to_char(BeatLabel label) {
  switch (label) {
    case BeatLabel::N: return 'N';
    case BeatLabel::S: return 'S';
    case BeatLabel::V: return 'V';
  }
  return '?';
}

BeatLabel parse_beat_label(std::string_view text) {
  if (text == "N") return BeatLabel::N;
  if (text == "S") return BeatLabel::S;
  if (text == "V") return BeatLabel::V;
  throw InputError("unknown beat label '" + std::string(text) + "' (expected N, S or V)");
}

std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::clean: return "clean";
    case Quality::corrupted: return "corrupted";
    case Quality::unknown: return "unknown";
  }
  return "unknown";
}

Quality parse_quality(std::string_view text) {
  if (text == "clean") return Quality::clean;
  if (text == "corrupted") return Quality::corrupted;
  if (text == "unknown" || text.empty()) return Quality::unknown;
  throw InputError("unknown quality tag '" + std::string(text) + "'");
}

void Record::validate() const {
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (annotations[i].sample_index >= samples.size())
      throw InputError("record " + patient_id + ": annotation at " +
                       std::to_string(annotations[i].sample_index) + " is past the end of the signal");
    if (i > 0 && annotations[i].sample_index <= annotations[i - 1].sample_index)
      throw InputError("record " + patient_id + ": annotation indices must be strictly increasing");
  }
}

bool Segment::has_arrhythmia() const {
  return std::any_of(annotations.begin(), annotations.end(),
                     [](const BeatAnnotation& a) { return a.label != BeatLabel::N; });
}

// ---------------------------------------------------------------------------
// Normalization

Segment normalize(Segment segment) {
  if (segment.samples.size() < 2) throw InputError("normalize: segment needs at least 2 samples");
  const auto [lo, hi] = std::minmax_element(segment.samples.begin(), segment.samples.end());
  const double xmin = *lo;
  const double xmax = *hi;
  segment.norm_min = xmin;
  segment.norm_max = xmax;
  segment.normalized = true;
  if (xmax == xmin) {
    segment.degenerate = true;
    std::fill(segment.samples.begin(), segment.samples.end(), 0.0);
    return segment;
  }
  segment.degenerate = false;
  const double range = xmax - xmin;
  for (double& v : segment.samples) {
    if (v == xmin) v = -1.0;
    else if (v == xmax) v = 1.0;
    else v = 2.0 * (v - xmin) / range - 1.0;
  }
  return segment;
}

Segment denormalize(Segment segment) {
  if (!segment.normalized) throw InputError("denormalize: segment carries no normalization range");
  if (segment.degenerate) {
    std::fill(segment.samples.begin(), segment.samples.end(), segment.norm_min);
  } else {
    const double half_range = 0.5 * (segment.norm_max - segment.norm_min);
    for (double& v : segment.samples) v = (v + 1.0) * half_range + segment.norm_min;
  }
  segment.normalized = false;
  segment.degenerate = false;
  return segment;
}

// ---------------------------------------------------------------------------
// Segmentation

std::vector<Segment> segment_record(const Record& record) {
  if (std::abs(record.sampling_rate * 10.0 - static_cast<double>(kSegmentLength)) > 1e-9)
    throw ConfigError("segment_record: sampling rate " + std::to_string(record.sampling_rate) +
                      " Hz is unsupported (10 s segments need 400 Hz)");
  record.validate();
  const std::size_t count = record.samples.size() / kSegmentLength;
  std::vector<Segment> out;
  out.reserve(count);
  auto ann = record.annotations.begin();
  for (std::size_t s = 0; s < count; ++s) {
    Segment seg;
    seg.source_id = record.patient_id;
    seg.start_index = s * kSegmentLength;
    seg.quality = record.quality;
    seg.samples.assign(record.samples.begin() + static_cast<std::ptrdiff_t>(seg.start_index),
                       record.samples.begin() + static_cast<std::ptrdiff_t>(seg.start_index + kSegmentLength));
    while (ann != record.annotations.end() && ann->sample_index < seg.start_index + kSegmentLength) {
      seg.annotations.push_back({ann->sample_index - seg.start_index, ann->label});
      ++ann;
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<double> stitch_segments(std::span<const Segment> segments) {
  std::vector<double> out;
  for (const auto& s : segments) out.insert(out.end(), s.samples.begin(), s.samples.end());
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic ECG

namespace {

struct Lobe {
  double offset_s;
  double amplitude;  // relative to the R height
  double width_s;
};

struct BeatShape {
  std::vector<Lobe> lobes;
};

// Offsets of P and T stretch with sqrt(RR) so fast rhythms do not overlap.
BeatShape beat_shape(BeatLabel label, double rr_s) {
  const double k = std::sqrt(std::clamp(rr_s, 0.25, 2.0));
  switch (label) {
    case BeatLabel::N:
      return {{{-0.16 * k, 0.12, 0.025},
               {-0.022, -0.10, 0.008},
               {0.0, 1.0, 0.009},
               {0.022, -0.20, 0.008},
               {0.28 * k, 0.28, 0.05}}};
    case BeatLabel::S:
      return {{{-0.14 * k, -0.05, 0.02},
               {-0.018, -0.08, 0.0065},
               {0.0, 0.95, 0.0072},
               {0.018, -0.18, 0.0065},
               {0.26 * k, 0.25, 0.045}}};
    case BeatLabel::V:
      return {{{-0.05, -0.08, 0.012},
               {0.0, 1.5, 0.022},
               {0.065, -0.35, 0.018},
               {0.32 * k, -0.35, 0.07}}};
  }
  return {};
}

}  // namespace

Record synth_ecg(double heart_rate_bpm, double duration_s, std::span<const BeatLabel> beat_script,
                 const SynthOptions& options) {
  if (!(heart_rate_bpm >= 30.0 && heart_rate_bpm <= 220.0))
    throw ConfigError("synth_ecg: heart rate must be within [30, 220] bpm");
  if (!(duration_s > 0.0)) throw ConfigError("synth_ecg: duration must be positive");
  const double fs = options.sampling_rate;
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
  Record rec;
  rec.patient_id = options.patient_id;
  rec.sampling_rate = fs;
  rec.quality = Quality::clean;
  rec.samples.assign(n, 0.0);

  const double rr = 60.0 / heart_rate_bpm;
  double t = 0.5 * rr;
  BeatLabel previous = BeatLabel::N;
  for (std::size_t i = 0;; ++i) {
    const BeatLabel label = i < beat_script.size() ? beat_script[i] : BeatLabel::N;
    if (i > 0) {
      double gap = rr;
      if (label == BeatLabel::S) gap = 0.75 * rr;
      else if (label == BeatLabel::V) gap = 0.7 * rr;
      if (previous == BeatLabel::V) gap = std::max(gap, 1.3 * rr) + (gap - rr);
      t += gap;
    }
    const long long r_index = std::llround(t * fs);
    if (r_index >= static_cast<long long>(n)) break;
    const double r_time = static_cast<double>(r_index) / fs;

    for (const Lobe& lobe : beat_shape(label, rr).lobes) {
      const double center = r_time + lobe.offset_s;
      const double reach = 6.0 * lobe.width_s;
      const long long first = std::max(0LL, static_cast<long long>(std::floor((center - reach) * fs)));
      const long long last = std::min(static_cast<long long>(n) - 1,
                                      static_cast<long long>(std::ceil((center + reach) * fs)));
      for (long long s = first; s <= last; ++s) {
        const double dt = static_cast<double>(s) / fs - center;
        rec.samples[static_cast<std::size_t>(s)] +=
            options.amplitude_mv * lobe.amplitude * std::exp(-0.5 * dt * dt / (lobe.width_s * lobe.width_s));
      }
    }
    rec.annotations.push_back({static_cast<std::size_t>(r_index), label});
    previous = label;
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Artifacts

void ArtifactSpec::validate(std::size_t segment_length) const {
  if (noise_snr_db && !std::isfinite(*noise_snr_db)) throw ConfigError("artifact spec: SNR must be finite");
  if (!(wander_amplitude_mv >= 0.0) || !std::isfinite(wander_amplitude_mv))
    throw ConfigError("artifact spec: wander amplitude must be >= 0");
  if (!(wander_frequency_hz >= 0.0) || !std::isfinite(wander_frequency_hz))
    throw ConfigError("artifact spec: wander frequency must be >= 0");
  if (!(qrs_attenuation > 0.0 && qrs_attenuation <= 1.0))
    throw ConfigError("artifact spec: QRS attenuation must be in (0, 1]");
  if (!(motion_amplitude_mv >= 0.0) || !(motion_duration_s > 0.0) || !(motion_frequency_hz > 0.0))
    throw ConfigError("artifact spec: motion burst parameters must be positive");
  for (const auto& c : cuts) {
    if (c.length == 0) throw ConfigError("artifact spec: cut length must be positive");
    if (!std::isfinite(c.fill)) throw ConfigError("artifact spec: cut fill must be finite");
    if (segment_length > 0 && c.start + c.length > segment_length)
      throw ConfigError("artifact spec: cut [" + std::to_string(c.start) + ", " +
                        std::to_string(c.start + c.length) + ") exceeds the segment");
  }
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("artifact spec: '" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
  return v;
}

std::size_t parse_count(std::string_view key, std::string_view text) {
  const double v = parse_number(key, text);
  if (v < 0.0 || v != std::floor(v))
    throw ConfigError("artifact spec: '" + std::string(key) + "' expects a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

ArtifactSpec parse_artifact_spec(std::string_view text) {
  ArtifactSpec spec;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("artifact spec: expected key = value, got '" + std::string(line) + "'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "noise_snr_db") {
      if (value == "none" || value.empty()) spec.noise_snr_db.reset();
      else spec.noise_snr_db = parse_number(key, value);
    } else if (key == "wander_amplitude_mv") {
      spec.wander_amplitude_mv = parse_number(key, value);
    } else if (key == "wander_frequency_hz") {
      spec.wander_frequency_hz = parse_number(key, value);
    } else if (key == "qrs_attenuation") {
      spec.qrs_attenuation = parse_number(key, value);
    } else if (key == "motion_bursts") {
      spec.motion_bursts = parse_count(key, value);
    } else if (key == "motion_amplitude_mv") {
      spec.motion_amplitude_mv = parse_number(key, value);
    } else if (key == "motion_duration_s") {
      spec.motion_duration_s = parse_number(key, value);
    } else if (key == "motion_frequency_hz") {
      spec.motion_frequency_hz = parse_number(key, value);
    } else if (key == "cuts") {
      spec.cuts.clear();
      std::size_t p = 0;
      while (p <= value.size()) {
        const auto semi = value.find(';', p);
        const std::string_view item =
            trim(value.substr(p, semi == std::string_view::npos ? std::string_view::npos : semi - p));
        p = semi == std::string_view::npos ? value.size() + 1 : semi + 1;
        if (item.empty()) continue;
        const auto c1 = item.find(':');
        const auto c2 = c1 == std::string_view::npos ? c1 : item.find(':', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos)
          throw ConfigError("artifact spec: cut '" + std::string(item) + "' must be start:length:fill");
        spec.cuts.push_back({parse_count(key, item.substr(0, c1)), parse_count(key, item.substr(c1 + 1, c2 - c1 - 1)),
                             parse_number(key, item.substr(c2 + 1))});
      }
    } else {
      throw ConfigError("artifact spec: unknown key '" + std::string(key) + "'");
    }
  }
  spec.validate();
  return spec;
}

std::string format_artifact_spec(const ArtifactSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "noise_snr_db = ";
  if (spec.noise_snr_db) os << *spec.noise_snr_db;
  else os << "none";
  os << "\nwander_amplitude_mv = " << spec.wander_amplitude_mv
     << "\nwander_frequency_hz = " << spec.wander_frequency_hz
     << "\nqrs_attenuation = " << spec.qrs_attenuation
     << "\nmotion_bursts = " << spec.motion_bursts
     << "\nmotion_amplitude_mv = " << spec.motion_amplitude_mv
     << "\nmotion_duration_s = " << spec.motion_duration_s
     << "\nmotion_frequency_hz = " << spec.motion_frequency_hz << "\ncuts = ";
  for (std::size_t i = 0; i < spec.cuts.size(); ++i)
    os << (i ? ";" : "") << spec.cuts[i].start << ':' << spec.cuts[i].length << ':' << spec.cuts[i].fill;
  os << '\n';
  return os.str();
}

Segment inject_artifacts(const Segment& segment, const ArtifactSpec& spec, std::uint64_t seed) {
  spec.validate(segment.samples.size());
  Segment out = segment;
  out.quality = Quality::corrupted;
  auto& x = out.samples;
  const std::size_t n = x.size();
  const double fs = kSamplingRateHz;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  if (spec.qrs_attenuation != 1.0) {
    const std::size_t half = static_cast<std::size_t>(std::llround(0.060 * fs));
    std::vector<bool> hit(n, false);
    for (const auto& a : segment.annotations) {
      const std::size_t lo = a.sample_index > half ? a.sample_index - half : 0;
      const std::size_t hi = std::min(n, a.sample_index + half + 1);
      for (std::size_t i = lo; i < hi; ++i) hit[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (hit[i]) x[i] *= spec.qrs_attenuation;
  }

  if (spec.wander_amplitude_mv > 0.0) {
    const double phase = two_pi * unit(rng);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += spec.wander_amplitude_mv *
              std::sin(two_pi * spec.wander_frequency_hz * static_cast<double>(i) / fs + phase);
  }

  if (spec.noise_snr_db && n > 0) {
    double signal_power = 0.0;
    for (double v : segment.samples) signal_power += v * v;
    signal_power /= static_cast<double>(n);
    if (signal_power > 0.0) {
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<double> noise(n);
      double noise_power = 0.0;
      for (double& v : noise) {
        v = gauss(rng);
        noise_power += v * v;
      }
      noise_power /= static_cast<double>(n);
      const double target = signal_power / std::pow(10.0, *spec.noise_snr_db / 10.0);
      const double k = std::sqrt(target / noise_power);
      for (std::size_t i = 0; i < n; ++i) x[i] += k * noise[i];
    }
  }

  for (std::size_t b = 0; b < spec.motion_bursts && n > 0; ++b) {
    const double center = unit(rng) * static_cast<double>(n);
    const double sigma = 0.25 * spec.motion_duration_s * fs;
    const double phase = two_pi * unit(rng);
    const double polarity = unit(rng) < 0.5 ? -1.0 : 1.0;
    const long long lo = std::max(0LL, static_cast<long long>(center - 4.0 * sigma));
    const long long hi = std::min(static_cast<long long>(n), static_cast<long long>(center + 4.0 * sigma) + 1);
    for (long long i = lo; i < hi; ++i) {
      const double d = (static_cast<double>(i) - center) / sigma;
      x[static_cast<std::size_t>(i)] +=
          polarity * spec.motion_amplitude_mv * std::exp(-0.5 * d * d) *
          std::sin(two_pi * spec.motion_frequency_hz * static_cast<double>(i) / fs + phase);
    }
  }

  for (const auto& c : spec.cuts) std::fill_n(x.begin() + static_cast<std::ptrdiff_t>(c.start), c.length, c.fill);

  out.normalized = false;
  out.degenerate = false;
  return out;
}

// ---------------------------------------------------------------------------
// Training set composition

TrainingPools compose_training_set(std::span<const Segment> segments, double target_arrhythmia_fraction,
                                   std::size_t size, std::uint64_t seed, bool allow_shortfall) {
  if (!(target_arrhythmia_fraction >= 0.0 && target_arrhythmia_fraction <= 1.0))
    throw ConfigError("compose_training_set: fraction must be in [0, 1]");
  TrainingPools pools;
  std::mt19937_64 rng(seed);
  const std::size_t want_arr = static_cast<std::size_t>(std::llround(target_arrhythmia_fraction * static_cast<double>(size)));
  const std::size_t want_norm = size - want_arr;

  auto build = [&](Quality q, std::vector<Segment>& pool, double& achieved) {
    std::vector<std::size_t> arr, norm;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].quality != q) continue;
      (segments[i].has_arrhythmia() ? arr : norm).push_back(i);
    }
    std::shuffle(arr.begin(), arr.end(), rng);
    std::shuffle(norm.begin(), norm.end(), rng);
    if (arr.size() < want_arr || norm.size() < want_norm) {
      const std::size_t take_arr = std::min(arr.size(), want_arr);
      const std::size_t take_norm = std::min(norm.size(), want_norm);
      const double frac = take_arr + take_norm > 0
                              ? static_cast<double>(take_arr) / static_cast<double>(take_arr + take_norm)
                              : 0.0;
      if (!allow_shortfall) {
        std::ostringstream os;
        os << "compose_training_set: " << to_string(q) << " pool has " << arr.size()
           << " arrhythmic and " << norm.size() << " normal segments; need " << want_arr << " and "
           << want_norm << " (achievable fraction " << frac << ")";
        throw InputError(os.str());
      }
      arr.resize(take_arr);
      norm.resize(take_norm);
    } else {
      arr.resize(want_arr);
      norm.resize(want_norm);
    }
    std::vector<std::size_t> chosen = arr;
    chosen.insert(chosen.end(), norm.begin(), norm.end());
    std::shuffle(chosen.begin(), chosen.end(), rng);
    for (std::size_t i : chosen) pool.push_back(segments[i]);
    achieved = pool.empty() ? 0.0 : static_cast<double>(arr.size()) / static_cast<double>(pool.size());
  };
  build(Quality::clean, pools.clean, pools.clean_arrhythmia_fraction);
  build(Quality::corrupted, pools.corrupted, pools.corrupted_arrhythmia_fraction);
  return pools;
}

SyntheticCorpus make_synthetic_corpus(const CorpusOptions& o) {
  if (!(o.bpm_min >= 30.0 && o.bpm_max <= 220.0 && o.bpm_min <= o.bpm_max))
    throw ConfigError("corpus: heart-rate range must lie within [30, 220] bpm");
  if (!(o.arrhythmia_fraction >= 0.0 && o.arrhythmia_fraction <= 1.0))
    throw ConfigError("corpus: arrhythmia fraction must be in [0, 1]");
  if (!(o.amplitude_min_mv > 0.0 && o.amplitude_min_mv <= o.amplitude_max_mv))
    throw ConfigError("corpus: amplitude range must be positive and ordered");
  if (!(o.random_cut_s >= 0.0 && o.random_cut_s < o.duration_s))
    throw ConfigError("corpus: random cut must be shorter than the record");
  const std::size_t n = static_cast<std::size_t>(std::llround(o.duration_s * kSamplingRateHz));
  o.artifacts.validate(n);

  SyntheticCorpus corpus;
  for (std::size_t i = 0; i < o.count; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(o.seed >> 32),
                      static_cast<std::uint32_t>(i), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double bpm = o.bpm_min + (o.bpm_max - o.bpm_min) * unit(rng);
    SynthOptions so;
    so.amplitude_mv = o.amplitude_min_mv + (o.amplitude_max_mv - o.amplitude_min_mv) * unit(rng);
    char id[64];
    std::snprintf(id, sizeof id, "%s_%04zu", o.id_prefix.c_str(), i);
    so.patient_id = id;

    // Spread the arrhythmic records evenly: record i is arrhythmic when
    // floor((i + 1) f) steps past floor(i f).
    const double f = o.arrhythmia_fraction;
    const bool arrhythmic = std::floor(static_cast<double>(i + 1) * f) > std::floor(static_cast<double>(i) * f);
    std::vector<BeatLabel> script;
    const double ectopic_draw = unit(rng);
    const double position_draw = unit(rng);
    if (arrhythmic) {
      const std::size_t beats = static_cast<std::size_t>(o.duration_s * bpm / 60.0);
      if (beats >= 4) {
        const std::size_t at = 2 + static_cast<std::size_t>(position_draw * static_cast<double>(beats - 3));
        script.assign(at + 1, BeatLabel::N);
        script[at] = ectopic_draw < 0.5 ? BeatLabel::S : BeatLabel::V;
      }
    }
    Record clean = synth_ecg(bpm, o.duration_s, script, so);
    clean.quality = Quality::clean;

    ArtifactSpec spec = o.artifacts;
    if (o.random_cut_s > 0.0) {
      const std::size_t len = static_cast<std::size_t>(std::llround(o.random_cut_s * kSamplingRateHz));
      const std::size_t start = static_cast<std::size_t>(unit(rng) * static_cast<double>(n - len + 1));
      spec.cuts.push_back({std::min(start, n - len), len, 0.0});
    }
    Segment seg;
    seg.samples = clean.samples;
    seg.annotations = clean.annotations;
    seg.source_id = clean.patient_id;
    const Segment dirty = inject_artifacts(seg, spec, rng());
    Record corrupted = clean;
    corrupted.samples = dirty.samples;
    corrupted.quality = Quality::corrupted;

    corpus.clean.push_back(std::move(clean));
    corpus.corrupted.push_back(std::move(corrupted));
  }
  return corpus;
}

double snr_db(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size() || reference.empty())
    throw InputError("snr_db: signals must be non-empty and equally long");
  double mr = 0.0, me = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    mr += reference[i];
    me += estimate[i];
  }
  mr /= static_cast<double>(reference.size());
  me /= static_cast<double>(reference.size());
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = reference[i] - mr;
    const double d = (estimate[i] - me) - r;
    sig += r * r;
    err += d * d;
  }
  return 10.0 * std::log10(sig / err);
}

}  // namespace ecgr
