#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ecgr/ecg_data.hpp"
#include "ecgr/errors.hpp"

using namespace ecgr;

namespace {

Segment seg_of(std::vector<double> v) {
  Segment s;
  s.samples = std::move(v);
  return s;
}

double power(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

std::vector<Segment> labelled_segments(std::size_t arrhythmic, std::size_t normal, Quality q) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < arrhythmic + normal; ++i) {
    Segment s = seg_of(std::vector<double>(10, static_cast<double>(i)));
    s.source_id = "r" + std::to_string(i);
    s.quality = q;
    s.annotations.push_back({2, i < arrhythmic ? (i % 2 ? BeatLabel::S : BeatLabel::V) : BeatLabel::N});
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("normalize maps the extremes exactly and round-trips") {
  const auto n = normalize(seg_of({2.0, -3.0, 0.5, 7.0}));
  CHECK(n.samples[1] == -1.0);
  CHECK(n.samples[3] == 1.0);
  CHECK(n.samples[0] == doctest::Approx(0.0));
  CHECK(n.normalized);
  const auto back = denormalize(n);
  CHECK(back.samples[2] == doctest::Approx(0.5).epsilon(1e-15));
  const auto flat = normalize(seg_of({4.0, 4.0, 4.0}));
  CHECK(flat.degenerate);
  CHECK(std::all_of(flat.samples.begin(), flat.samples.end(), [](double v) { return v == 0.0; }));
  CHECK(denormalize(flat).samples[1] == 4.0);
  CHECK_THROWS_AS(denormalize(seg_of({1.0, 2.0})), InputError);
}

TEST_CASE("segmentation into 10 s windows") {
  Record r;
  r.patient_id = "p";
  r.samples.assign(3600 * 400, 0.0);
  CHECK(segment_record(r).size() == 360);

  Record shortr;
  shortr.samples.assign(3960, 0.0);
  CHECK(segment_record(shortr).empty());

  Record a;
  a.patient_id = "a";
  a.samples.assign(8000 + 17, 0.0);
  a.annotations = {{100, BeatLabel::N}, {4100, BeatLabel::V}, {8010, BeatLabel::N}};
  const auto s = segment_record(a);
  REQUIRE(s.size() == 2);
  CHECK(s[0].annotations.size() == 1);
  REQUIRE(s[1].annotations.size() == 1);
  CHECK(s[1].annotations[0].sample_index == 100);
  CHECK(s[1].annotations[0].label == BeatLabel::V);
  CHECK(s[1].start_index == 4000);
  CHECK(s[1].has_arrhythmia());
  CHECK_FALSE(s[0].has_arrhythmia());
  CHECK(stitch_segments(s).size() == 8000);

  Record wrong = a;
  wrong.sampling_rate = 360.0;
  CHECK_THROWS_AS(segment_record(wrong), ConfigError);
}

TEST_CASE("synthetic beats land on their annotations") {
  const auto r = synth_ecg(60.0, 10.0);
  CHECK(r.samples.size() == 4000);
  CHECK(r.annotations.size() == 10);
  for (const auto& a : r.annotations) CHECK(a.label == BeatLabel::N);
  for (double bpm : {40.0, 60.0, 90.0, 150.0, 220.0}) {
    const BeatLabel script[] = {BeatLabel::N, BeatLabel::N, BeatLabel::V, BeatLabel::N, BeatLabel::S};
    const auto s = synth_ecg(bpm, 10.0, script);
    for (const auto& a : s.annotations) {
      // The R-peak is a local maximum within one sample.
      const std::size_t i = a.sample_index;
      const std::size_t lo = i > 8 ? i - 8 : 0, hi = std::min(s.samples.size(), i + 9);
      const auto top = std::max_element(s.samples.begin() + static_cast<long>(lo), s.samples.begin() + static_cast<long>(hi));
      CHECK(std::abs(static_cast<long>(top - s.samples.begin()) - static_cast<long>(i)) <= 1);
    }
    REQUIRE(s.annotations.size() >= 5);
    CHECK(s.annotations[2].label == BeatLabel::V);
    CHECK(s.annotations[4].label == BeatLabel::S);
  }
  CHECK_THROWS_AS(synth_ecg(20.0, 10.0), ConfigError);
  CHECK_THROWS_AS(synth_ecg(60.0, 0.0), ConfigError);
}

TEST_CASE("artifact injection") {
  Segment clean;
  const auto r = synth_ecg(72.0, 10.0);
  clean.samples = r.samples;
  clean.annotations = r.annotations;

  ArtifactSpec none;
  const auto same = inject_artifacts(clean, none, 1);
  CHECK(same.samples == clean.samples);
  CHECK(same.quality == Quality::corrupted);

  for (double snr : {0.0, 10.0, 20.0}) {
    ArtifactSpec s;
    s.noise_snr_db = snr;
    const auto x = inject_artifacts(clean, s, 5);
    std::vector<double> noise(x.samples.size());
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = x.samples[i] - clean.samples[i];
    const double measured = 10.0 * std::log10(power(clean.samples) / power(noise));
    CHECK(std::abs(measured - snr) < 0.1);
    if (snr == 0.0) CHECK(std::abs(power(noise) / power(clean.samples) - 1.0) < 0.02);
  }

  ArtifactSpec cuts;
  cuts.cuts = {{100, 50, 0.0}, {1000, 400, 0.25}};
  const auto c = inject_artifacts(clean, cuts, 2);
  CHECK(std::count(c.samples.begin() + 100, c.samples.begin() + 150, 0.0) == 50);
  CHECK(std::count(c.samples.begin() + 1000, c.samples.begin() + 1400, 0.25) == 400);
  CHECK(c.samples[150] == clean.samples[150]);

  ArtifactSpec att;
  att.qrs_attenuation = 0.3;
  const auto a = inject_artifacts(clean, att, 3);
  const std::size_t peak = clean.annotations[3].sample_index;
  CHECK(a.samples[peak] == doctest::Approx(0.3 * clean.samples[peak]));
  CHECK(a.samples[peak + 24] == doctest::Approx(0.3 * clean.samples[peak + 24]));
  CHECK(a.samples[peak + 40] == clean.samples[peak + 40]);

  ArtifactSpec mixed;
  mixed.noise_snr_db = 6.0;
  mixed.wander_amplitude_mv = 0.2;
  mixed.motion_bursts = 2;
  mixed.motion_amplitude_mv = 0.5;
  CHECK(inject_artifacts(clean, mixed, 9).samples == inject_artifacts(clean, mixed, 9).samples);
  CHECK(inject_artifacts(clean, mixed, 9).samples != inject_artifacts(clean, mixed, 10).samples);

  ArtifactSpec bad;
  bad.cuts = {{3990, 20, 0.0}};
  CHECK_THROWS_AS(inject_artifacts(clean, bad, 1), ConfigError);
}

TEST_CASE("artifact spec text round trip") {
  ArtifactSpec s;
  s.noise_snr_db = 3.5;
  s.wander_amplitude_mv = 0.3;
  s.cuts = {{10, 20, 0.0}, {400, 5, -0.5}};
  s.qrs_attenuation = 0.3;
  s.motion_bursts = 2;
  s.motion_amplitude_mv = 0.4;
  CHECK(parse_artifact_spec(format_artifact_spec(s)) == s);
  CHECK(parse_artifact_spec(format_artifact_spec(ArtifactSpec{})) == ArtifactSpec{});
  const auto p = parse_artifact_spec("# comment\nnoise_snr_db = none\nwander_amplitude_mv=0.1\n");
  CHECK_FALSE(p.noise_snr_db.has_value());
  CHECK(p.wander_amplitude_mv == 0.1);
  CHECK_THROWS_AS(parse_artifact_spec("bogus = 1"), ConfigError);
  CHECK_THROWS_AS(parse_artifact_spec("noise_snr_db = loud"), ConfigError);
  CHECK_THROWS_AS(parse_artifact_spec("cuts = 1:2"), ConfigError);
}

TEST_CASE("training set composition") {
  auto segs = labelled_segments(60, 120, Quality::clean);
  const auto cor = labelled_segments(60, 120, Quality::corrupted);
  segs.insert(segs.end(), cor.begin(), cor.end());
  const auto pools = compose_training_set(segs, 0.334, 100, 4);
  REQUIRE(pools.clean.size() == 100);
  REQUIRE(pools.corrupted.size() == 100);
  const auto arr = std::count_if(pools.clean.begin(), pools.clean.end(), [](const Segment& s) { return s.has_arrhythmia(); });
  CHECK((arr == 33 || arr == 34));
  for (const auto& s : pools.corrupted) CHECK(s.quality == Quality::corrupted);

  const auto small = compose_training_set(segs, 0.334, 3, 4);
  CHECK(std::count_if(small.clean.begin(), small.clean.end(), [](const Segment& s) { return s.has_arrhythmia(); }) == 1);

  const auto again = compose_training_set(segs, 0.334, 100, 4);
  for (std::size_t i = 0; i < 100; ++i) CHECK(again.clean[i].source_id == pools.clean[i].source_id);

  const auto few = labelled_segments(5, 200, Quality::clean);
  CHECK_THROWS_AS(compose_training_set(few, 0.334, 100, 1), InputError);
  const auto taken = compose_training_set(few, 0.334, 100, 1, true);
  CHECK(std::count_if(taken.clean.begin(), taken.clean.end(), [](const Segment& s) { return s.has_arrhythmia(); }) == 5);
  CHECK_THROWS_AS(compose_training_set(segs, 1.5, 10, 1), ConfigError);
}

TEST_CASE("synthetic corpus is paired and reproducible") {
  CorpusOptions o;
  o.count = 12;
  o.bpm_max = 100.0;
  o.artifacts.noise_snr_db = 0.0;
  o.random_cut_s = 1.0;
  const auto a = make_synthetic_corpus(o);
  const auto b = make_synthetic_corpus(o);
  REQUIRE(a.clean.size() == 12);
  REQUIRE(a.corrupted.size() == 12);
  std::size_t arrhythmic = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a.clean[i].samples == b.clean[i].samples);
    CHECK(a.corrupted[i].samples == b.corrupted[i].samples);
    CHECK(a.clean[i].annotations == a.corrupted[i].annotations);
    CHECK(a.clean[i].quality == Quality::clean);
    CHECK(a.corrupted[i].quality == Quality::corrupted);
    CHECK(std::count(a.corrupted[i].samples.begin(), a.corrupted[i].samples.end(), 0.0) >= 400);
    for (const auto& ann : a.clean[i].annotations)
      if (ann.label != BeatLabel::N) ++arrhythmic;
  }
  CHECK(arrhythmic == 4);
  CHECK(a.clean[0].patient_id == "synth_0000");
}

TEST_CASE("snr on mean-removed signals") {
  const std::vector<double> ref{1.0, -1.0, 1.0, -1.0};
  std::vector<double> est{1.5, -0.5, 1.5, -0.5};  // pure offset
  CHECK(std::isinf(snr_db(ref, est)));
  est = {1.1, -1.0, 1.0, -1.0};
  // error after mean removal: 0.1 - 0.025 at one sample, -0.025 elsewhere
  const double err = 0.075 * 0.075 + 3 * 0.025 * 0.025;
  CHECK(snr_db(ref, est) == doctest::Approx(10.0 * std::log10(4.0 / err)));
  CHECK_THROWS_AS(snr_db(ref, std::vector<double>{1.0}), InputError);
}
