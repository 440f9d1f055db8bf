#include "ecgr/peak_eval.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "ecgr/errors.hpp"

namespace ecgr {

namespace {

std::size_t samples_of(double seconds, double fs) {
  return static_cast<std::size_t>(std::llround(seconds * fs));
}

void check_input(std::span<const double> signal, double fs, const char* who) {
  if (fs != kSamplingRateHz)
    throw ConfigError(std::string(who) + ": only 400 Hz signals are supported, got " + std::to_string(fs));
  if (signal.size() < samples_of(2.0, fs))
    throw InputError(std::string(who) + ": signal must be at least 2 s long");
  for (double v : signal)
    if (!std::isfinite(v)) throw InputError(std::string(who) + ": signal contains NaN/Inf");
}

// Mean over [i - before, i + after] with edge samples repeated.
std::vector<double> moving_average(std::span<const double> x, std::size_t before, std::size_t after) {
  const std::size_t n = x.size();
  const long long N = static_cast<long long>(n);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  const double width = static_cast<double>(before + after + 1);
  std::vector<double> y(n);
  for (long long i = 0; i < N; ++i) {
    const long long lo = i - static_cast<long long>(before);
    const long long hi = i + static_cast<long long>(after);
    double s = 0.0;
    // Clamped head and tail contribute repeats of the edge samples.
    if (lo < 0) s += static_cast<double>(-lo) * x[0];
    if (hi >= N) s += static_cast<double>(hi - N + 1) * x[n - 1];
    const long long a = std::max(lo, 0LL);
    const long long b = std::min(hi, N - 1);
    if (b >= a) s += prefix[static_cast<std::size_t>(b + 1)] - prefix[static_cast<std::size_t>(a)];
    y[static_cast<std::size_t>(i)] = s / width;
  }
  return y;
}

struct FrontEnd {
  std::vector<double> bandpassed;
  std::vector<double> derivative;
};

// Low-pass: two 12-point boxcars (about 15 Hz at 400 Hz). High-pass: subtract
// a 65-point mean (about 5 Hz). Five-point derivative.
FrontEnd front_end(std::span<const double> x) {
  const auto lp = moving_average(moving_average(x, 6, 5), 5, 6);
  const auto base = moving_average(lp, 32, 32);
  FrontEnd fe;
  const std::size_t n = x.size();
  fe.bandpassed.resize(n);
  for (std::size_t i = 0; i < n; ++i) fe.bandpassed[i] = lp[i] - base[i];
  fe.derivative.resize(n);
  const auto& b = fe.bandpassed;
  auto at = [&](long long i) { return b[static_cast<std::size_t>(std::clamp(i, 0LL, static_cast<long long>(n) - 1))]; };
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    fe.derivative[static_cast<std::size_t>(i)] = (2.0 * at(i + 2) + at(i + 1) - at(i - 1) - 2.0 * at(i - 2)) / 8.0;
  return fe;
}

// Positive samples that dominate a +-half_width neighbourhood (first of a plateau).
std::vector<std::size_t> candidate_peaks(const std::vector<double>& f, std::size_t half_width) {
  std::vector<std::size_t> out;
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(f[i] > 0.0)) continue;
    const std::size_t lo = i > half_width ? i - half_width : 0;
    const std::size_t hi = std::min(n - 1, i + half_width);
    bool is_peak = true;
    for (std::size_t j = lo; j < i && is_peak; ++j) is_peak = f[j] < f[i];
    for (std::size_t j = i + 1; j <= hi && is_peak; ++j) is_peak = f[j] <= f[i];
    if (is_peak) out.push_back(i);
  }
  return out;
}

double max_abs_in(const std::vector<double>& f, std::size_t center, std::size_t half_width) {
  const std::size_t lo = center > half_width ? center - half_width : 0;
  const std::size_t hi = std::min(f.size() - 1, center + half_width);
  double m = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) m = std::max(m, std::abs(f[i]));
  return m;
}

// Moves each detection to the raw maximum within +-window, then enforces the
// refractory gap by keeping the taller of two close detections.
std::vector<std::size_t> refine(std::span<const double> signal, const std::vector<std::size_t>& coarse,
                                std::size_t window, std::size_t refractory) {
  std::vector<std::size_t> peaks;
  for (std::size_t c : coarse) {
    const std::size_t lo = c > window ? c - window : 0;
    const std::size_t hi = std::min(signal.size() - 1, c + window);
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i)
      if (signal[i] > signal[best]) best = i;
    peaks.push_back(best);
  }
  std::sort(peaks.begin(), peaks.end());
  peaks.erase(std::unique(peaks.begin(), peaks.end()), peaks.end());
  std::vector<std::size_t> out;
  for (std::size_t p : peaks) {
    if (!out.empty() && p - out.back() < refractory) {
      if (signal[p] > signal[out.back()]) out.back() = p;
      continue;
    }
    out.push_back(p);
  }
  return out;
}

double mean_of(const std::deque<double>& d) {
  return d.empty() ? 0.0 : std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

double median_of(const std::deque<double>& d) {
  if (d.empty()) return 0.0;
  std::vector<double> v(d.begin(), d.end());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void push_bounded(std::deque<double>& d, double v, std::size_t cap) {
  d.push_back(v);
  while (d.size() > cap) d.pop_front();
}

// Shared decision loop. `threshold()` gives the primary threshold, the
// search-back threshold is half of it.
template <typename Threshold, typename OnSignal, typename OnNoise>
std::vector<std::size_t> decide(const std::vector<double>& feature, const std::vector<double>& derivative,
                                const std::vector<std::size_t>& candidates, std::size_t refractory,
                                std::size_t t_wave, double search_back_factor, Threshold threshold,
                                OnSignal on_signal, OnNoise on_noise) {
  std::vector<std::size_t> accepted;
  std::deque<double> rr;
  double last_slope = 0.0;
  const std::size_t slope_window = samples_of(0.075, kSamplingRateHz);

  auto accept = [&](std::size_t c, bool from_search_back) {
    if (!accepted.empty()) push_bounded(rr, static_cast<double>(c - accepted.back()), 8);
    accepted.push_back(c);
    last_slope = max_abs_in(derivative, c, slope_window);
    on_signal(feature[c], from_search_back);
  };

  auto search_back = [&](std::size_t until) {
    if (accepted.empty() || rr.empty()) return;
    const double limit = search_back_factor * mean_of(rr);
    if (static_cast<double>(until - accepted.back()) <= limit) return;
    const double t2 = 0.5 * threshold();
    std::size_t best = 0;
    bool found = false;
    for (std::size_t c : candidates) {
      if (c <= accepted.back() + refractory || c >= until) continue;
      if (until - c < refractory) continue;
      if (feature[c] > t2 && (!found || feature[c] > feature[best])) {
        best = c;
        found = true;
      }
    }
    if (found) accept(best, true);
  };

  for (std::size_t c : candidates) {
    search_back(c);
    if (!accepted.empty() && c - accepted.back() < refractory) continue;
    const double v = feature[c];
    if (v > threshold()) {
      if (!accepted.empty() && c - accepted.back() < t_wave &&
          max_abs_in(derivative, c, slope_window) < 0.5 * last_slope) {
        on_noise(v);
        continue;
      }
      accept(c, false);
    } else {
      on_noise(v);
    }
  }
  search_back(feature.size());
  return accepted;
}

}  // namespace

DetectionResult detect_pan_tompkins(std::span<const double> signal, double fs, const PanTompkinsParams& p) {
  check_input(signal, fs, "pan-tompkins");
  const FrontEnd fe = front_end(signal);
  std::vector<double> squared(signal.size());
  for (std::size_t i = 0; i < squared.size(); ++i) squared[i] = fe.derivative[i] * fe.derivative[i];
  const std::size_t w = samples_of(p.integration_window_s, fs);
  const auto mwi = moving_average(squared, w / 2, w - w / 2 - 1);

  const std::size_t refractory = samples_of(p.refractory_s, fs);
  const auto candidates = candidate_peaks(mwi, refractory / 2);

  const std::size_t learn = std::min(mwi.size(), samples_of(p.learning_period_s, fs));
  double spki = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn)) / 3.0;
  double npki = std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn), 0.0) /
                static_cast<double>(learn) / 2.0;
  auto threshold = [&] { return npki + 0.25 * (spki - npki); };
  auto on_signal = [&](double v, bool search_back) {
    spki = search_back ? 0.25 * v + 0.75 * spki : 0.125 * v + 0.875 * spki;
  };
  auto on_noise = [&](double v) { npki = 0.125 * v + 0.875 * npki; };

  const auto coarse = decide(mwi, fe.derivative, candidates, refractory, samples_of(p.t_wave_window_s, fs),
                             p.search_back_factor, threshold, on_signal, on_noise);
  return {refine(signal, coarse, samples_of(p.refine_window_s, fs), refractory), "pan-tompkins"};
}

DetectionResult detect_hamilton(std::span<const double> signal, double fs, const HamiltonParams& p) {
  check_input(signal, fs, "hamilton");
  const FrontEnd fe = front_end(signal);
  std::vector<double> rectified(signal.size());
  for (std::size_t i = 0; i < rectified.size(); ++i) rectified[i] = std::abs(fe.derivative[i]);
  const std::size_t w = samples_of(p.average_window_s, fs);
  const auto avg = moving_average(rectified, w / 2, w - w / 2 - 1);

  const std::size_t refractory = samples_of(p.refractory_s, fs);
  const auto candidates = candidate_peaks(avg, refractory / 2);

  // QRS history seeded with the maximum of each of the first (up to 8) seconds.
  std::deque<double> qrs, noise;
  const std::size_t second = samples_of(1.0, fs);
  for (std::size_t s = 0; s < p.history && (s + 1) * second <= avg.size(); ++s)
    qrs.push_back(*std::max_element(avg.begin() + static_cast<std::ptrdiff_t>(s * second),
                                    avg.begin() + static_cast<std::ptrdiff_t>((s + 1) * second)));
  noise.assign(p.history, 0.0);

  auto threshold = [&] {
    const double nm = median_of(noise);
    return nm + p.threshold_coefficient * (median_of(qrs) - nm);
  };
  auto on_signal = [&](double v, bool) { push_bounded(qrs, v, p.history); };
  auto on_noise = [&](double v) { push_bounded(noise, v, p.history); };

  const auto coarse = decide(avg, fe.derivative, candidates, refractory, samples_of(p.t_wave_window_s, fs),
                             p.search_back_factor, threshold, on_signal, on_noise);
  return {refine(signal, coarse, samples_of(p.refine_window_s, fs), refractory), "hamilton"};
}

std::size_t detector_refractory_samples(std::string_view name, double fs) {
  if (name == "pan-tompkins") return samples_of(PanTompkinsParams{}.refractory_s, fs);
  if (name == "hamilton") return samples_of(HamiltonParams{}.refractory_s, fs);
  throw ConfigError("unknown detector '" + std::string(name) + "' (expected pan-tompkins or hamilton)");
}

Detector detector_by_name(std::string_view name) {
  if (name == "pan-tompkins")
    return [](std::span<const double> s, double fs) { return detect_pan_tompkins(s, fs); };
  if (name == "hamilton") return [](std::span<const double> s, double fs) { return detect_hamilton(s, fs); };
  throw ConfigError("unknown detector '" + std::string(name) + "' (expected pan-tompkins or hamilton)");
}

std::size_t tolerance_samples(double tolerance_ms, double fs) {
  if (!(tolerance_ms >= 0.0) || !std::isfinite(tolerance_ms)) throw ConfigError("tolerance must be >= 0 ms");
  return static_cast<std::size_t>(std::floor(tolerance_ms * fs / 1000.0 + 1e-9));
}

MatchResult match_peaks(std::span<const std::size_t> detected, std::span<const std::size_t> truth,
                        double tolerance_ms, double fs) {
  if (!std::is_sorted(detected.begin(), detected.end()) || !std::is_sorted(truth.begin(), truth.end()))
    throw InputError("match_peaks: index lists must be sorted");
  const std::size_t tol = tolerance_samples(tolerance_ms, fs);
  MatchResult m;
  std::vector<bool> used(detected.size(), false);
  std::size_t start = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const std::size_t t = truth[k];
    while (start < detected.size() && detected[start] + tol < t) ++start;
    std::size_t best = detected.size();
    std::size_t best_dist = 0;
    for (std::size_t j = start; j < detected.size() && detected[j] <= t + tol; ++j) {
      if (used[j]) continue;
      const std::size_t d = detected[j] > t ? detected[j] - t : t - detected[j];
      if (best == detected.size() || d < best_dist) {
        best = j;
        best_dist = d;
      }
    }
    if (best == detected.size()) {
      m.missed.push_back(k);
    } else {
      used[best] = true;
      m.pairs.emplace_back(t, detected[best]);
    }
  }
  m.tp = m.pairs.size();
  m.fn = truth.size() - m.tp;
  m.fp = detected.size() - m.tp;
  return m;
}

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  MetricsReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  const double TP = static_cast<double>(tp);
  if (tp + fp > 0) r.precision = 100.0 * TP / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.sensitivity = 100.0 * TP / static_cast<double>(tp + fn);
  if (r.precision && r.sensitivity) {
    const double s = *r.precision + *r.sensitivity;
    r.f1 = s > 0.0 ? 2.0 * *r.precision * *r.sensitivity / s : 0.0;
  }
  return r;
}

MetricsReport metrics(const MatchResult& match, std::span<const BeatAnnotation> annotations) {
  MetricsReport r = metrics_from_counts(match.tp, match.fp, match.fn);
  for (std::size_t k : match.missed) {
    if (k >= annotations.size()) continue;
    if (annotations[k].label == BeatLabel::S) ++r.s_missed;
    else if (annotations[k].label == BeatLabel::V) ++r.v_missed;
  }
  return r;
}

MetricsReport pool_reports(std::span<const MetricsReport> reports) {
  std::size_t tp = 0, fp = 0, fn = 0, s = 0, v = 0;
  for (const auto& r : reports) {
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
    s += r.s_missed;
    v += r.v_missed;
  }
  MetricsReport out = metrics_from_counts(tp, fp, fn);
  out.s_missed = s;
  out.v_missed = v;
  return out;
}

MetricsReport mean_reports(std::span<const MetricsReport> reports) {
  MetricsReport out = pool_reports(reports);
  auto average = [&](std::optional<double> MetricsReport::*field) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : reports)
      if (r.*field) {
        sum += *(r.*field);
        ++n;
      }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  out.precision = average(&MetricsReport::precision);
  out.sensitivity = average(&MetricsReport::sensitivity);
  out.f1 = average(&MetricsReport::f1);
  return out;
}

}  // namespace ecgr
