// Acceptance checks, one line per criterion. Tolerances are fixed here and
// never read from the environment. `--quick` shortens the long training run
// for development; its verdict on criteria 4, 8 and 9 is then not binding.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ecgr/checkpoint.hpp"
#include "ecgr/cli.hpp"
#include "ecgr/cyclegan.hpp"
#include "ecgr/ecg_data.hpp"
#include "ecgr/evaluation.hpp"
#include "ecgr/numerics.hpp"
#include "ecgr/peak_eval.hpp"
#include "ecgr/plot.hpp"
#include "ecgr/record_io.hpp"
#include "ecgr/selfonn.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace ecgr;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kQReductionTol = 1e-12;
constexpr double kQReductionSeconds = 60.0;
constexpr double kPathTol = 1e-10;
constexpr double kGradTol = 1e-4;
constexpr std::size_t kGradCoords = 100;
constexpr double kGradFloor = 1e-6;  // gradients below this are compared absolutely
constexpr double kGradSeconds = 300.0;
constexpr double kBookkeepingTol = 1e-12;
constexpr double kParamBand = 0.10;
constexpr double kRatioLo = 2.85, kRatioHi = 3.0;
constexpr double kMetricTol = 0.15;
constexpr double kDetectorF1 = 99.0;
constexpr double kDetectorSeconds = 1.0;
constexpr double kSnrGainDb = 6.0;
constexpr double kF1GainPts = 5.0;
constexpr double kTrainSeconds = 7200.0;
constexpr double kTwoPassSlack = 0.5;
constexpr double kRoundTripTol = 1e-12;

struct Verdict {
  int id;
  bool pass;
  std::string text;
};
std::vector<Verdict> verdicts;

void report(int id, bool pass, const std::string& text) {
  verdicts.push_back({id, pass, text});
  std::fprintf(stderr, "  criterion %d done: %s\n", id, pass ? "PASS" : "FAIL");
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  std::size_t configs = 0;
  for (std::size_t trial = 0; trial < 24; ++trial, ++configs) {
    const std::size_t cin = 1 + rng() % 4, cout = 1 + rng() % 4, k = 1 + rng() % 7, stride = 1 + rng() % 3;
    if (trial % 2 == 0) {
      OperationalConvLayer l(cin, cout, 1, k, stride, rng() % k);
      l.weights = oracle::random_kernel(cout, cin, 1, k, rng);
      l.bias = oracle::random_vector(cout, rng);
      const auto x = oracle::random_map(3, cin, k + 8 + rng() % 40, rng);
      const auto y = op_forward(l, x);
      worst = std::max(worst, max_abs_diff(y.values(), conv1d(x, l.weights, l.bias, l.geometry).values()));
      const auto u = oracle::random_map(3, cout, y.length(), rng);
      const auto a = op_backward(l, x, u);
      const auto b = conv1d_backward(x, l.weights, u, l.geometry);
      worst = std::max({worst, max_abs_diff(a.grad_x.values(), b.grad_x.values()),
                        max_abs_diff(a.grad_w.weights, b.grad_w.weights), max_abs_diff(a.grad_bias, b.grad_bias)});
    } else {
      OperationalTransposedConvLayer l(cin, cout, 1, k, stride, rng() % k, stride > 1 ? rng() % stride : 0);
      l.weights = oracle::random_kernel(cout, cin, 1, k, rng);
      l.bias = oracle::random_vector(cout, rng);
      const auto x = oracle::random_map(3, cin, 4 + rng() % 20, rng);
      const auto y = op_tconv_forward(l, x);
      worst = std::max(worst, max_abs_diff(y.values(), tconv1d(x, l.weights, l.bias, l.geometry).values()));
      const auto u = oracle::random_map(3, cout, y.length(), rng);
      const auto a = op_tconv_backward(l, x, u);
      const auto b = tconv1d_backward(x, l.weights, u, l.geometry);
      worst = std::max({worst, max_abs_diff(a.grad_x.values(), b.grad_x.values()),
                        max_abs_diff(a.grad_w.weights, b.grad_w.weights), max_abs_diff(a.grad_bias, b.grad_bias)});
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst <= kQReductionTol && configs >= 20 && secs < kQReductionSeconds,
         fmt("Q=1 reduction over %zu layer configs: max |diff| %.3g (tol %.0e), %.2f s (limit %.0f s)", configs,
             worst, kQReductionTol, secs, kQReductionSeconds));
}

void criterion_2() {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  std::size_t instances = 0;
  for (std::size_t q = 1; q <= 5; ++q)
    for (std::size_t k = 1; k <= 7; ++k) {
      const std::size_t cin = 1 + rng() % 4, cout = 1 + rng() % 4, stride = 1 + rng() % 3;
      OperationalConvLayer c(cin, cout, q, k, stride, rng() % k);
      c.weights = oracle::random_kernel(cout, cin, q, k, rng);
      c.bias = oracle::random_vector(cout, rng);
      const auto x = oracle::random_map(2, cin, k + 10 + rng() % 20, rng);
      worst = std::max(worst, max_abs_diff(op_forward(c, x).values(),
                                           oracle::generative_conv(x, c.weights, c.bias, c.geometry).values()));
      OperationalTransposedConvLayer t(cin, cout, q, k, stride, rng() % k, stride > 1 ? rng() % stride : 0);
      t.weights = oracle::random_kernel(cout, cin, q, k, rng);
      t.bias = oracle::random_vector(cout, rng);
      const auto xt = oracle::random_map(2, cin, 3 + rng() % 12, rng);
      worst = std::max(worst, max_abs_diff(op_tconv_forward(t, xt).values(),
                                           oracle::generative_tconv(xt, t.weights, t.bias, t.geometry).values()));
      instances += 2;
    }
  report(2, worst <= kPathTol,
         fmt("direct double sum vs fused Q-convolution, %zu instances up to Q=5 K=7 4 channels: max |diff| %.3g "
             "(tol %.0e)",
             instances, worst, kPathTol));
}

// Central differences on sampled coordinates of a network objective.
struct NetCheck {
  std::size_t checked = 0;
  double worst = 0.0;
};

template <typename Net>
void check_network(Net& net, const GradientSet& analytic, const std::function<double()>& objective,
                   std::size_t coords, std::mt19937_64& rng, NetCheck& out) {
  auto blocks = net.parameters();
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.values.size();
  for (std::size_t n = 0; n < coords; ++n) {
    std::size_t flat = rng() % total, b = 0;
    while (flat >= blocks[b].values.size()) flat -= blocks[b].values.size(), ++b;
    double& p = blocks[b].values[flat];
    const double keep = p;
    const double h = 1e-6 * std::max(1.0, std::abs(keep));
    p = keep + h;
    const double fp = objective();
    p = keep - h;
    const double fm = objective();
    p = keep;
    const double num = (fp - fm) / (2.0 * h);
    out.worst = std::max(out.worst, relative_error(analytic.blocks[b][flat], num, kGradFloor));
    ++out.checked;
  }
}

void criterion_3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1003);
  std::vector<std::string> parts;
  bool ok = true;

  // Layers.
  for (std::size_t q : {1, 3, 5}) {
    OperationalConvLayer c(3, 4, q, 5, 2, 2);
    c.weights = oracle::random_kernel(4, 3, q, 5, rng);
    c.bias = oracle::random_vector(4, rng);
    const auto rc = grad_check(c, oracle::random_map(2, 3, 40, rng), kGradCoords, 11 + q);
    OperationalTransposedConvLayer t(4, 3, q, 6, 2, 2, 0);
    t.weights = oracle::random_kernel(3, 4, q, 6, rng);
    t.bias = oracle::random_vector(3, rng);
    const auto rt = grad_check(t, oracle::random_map(2, 4, 20, rng), kGradCoords, 21 + q);
    ok = ok && rc.passed(kGradTol) && rt.passed(kGradTol) && rc.checked >= kGradCoords && rt.checked >= kGradCoords;
    parts.push_back(fmt("conv Q=%zu %.2g/%zu, tconv Q=%zu %.2g/%zu", q, rc.max_rel_error, rc.checked, q,
                        rt.max_rel_error, rt.checked));
  }

  // Losses and the miniature end-to-end composite at L = 128.
  GeneratorConfig g;
  g.q_order = 3;
  g.encoder_channels = {4, 6, 8};
  DiscriminatorConfig d;
  d.q_order = 3;
  d.channels = {4, 6};
  d.strides = {2, 2, 1};
  const auto xc = oracle::random_map(2, 1, 128, rng, -0.95, 0.95);
  const auto xx = oracle::random_map(2, 1, 128, rng, -0.95, 0.95);
  struct Variant {
    const char* name;
    double lambda, beta;
  };
  for (const Variant v : {Variant{"adversarial", 0.0, 0.0}, Variant{"adversarial+cycle", 10.0, 0.0},
                          Variant{"adversarial+identity", 0.0, 5.0}, Variant{"composite", 10.0, 5.0}}) {
    TrainConfig cfg;
    cfg.q_order = 3;
    cfg.seed = 77;
    cfg.lambda_cyc = v.lambda;
    cfg.beta_ide = v.beta;
    CycleGanModel m(g, d, cfg);
    const auto grads = compute_gradients(m, xc, xx, cfg);
    NetCheck gen, disc;
    auto total = [&] { return compute_gradients(m, xc, xx, cfg).losses.total; };
    check_network(m.gx2c, grads.gx2c, total, kGradCoords / 2, rng, gen);
    check_network(m.gc2x, grads.gc2x, total, kGradCoords / 2, rng, gen);
    if (std::strcmp(v.name, "composite") == 0) {
      // Discriminator loss: DC and DX with the generated batches held fixed.
      check_network(m.dc, grads.dc, [&] { return compute_gradients(m, xc, xx, cfg).losses.d_clean; },
                    kGradCoords / 2, rng, disc);
      check_network(m.dx, grads.dx, [&] { return compute_gradients(m, xc, xx, cfg).losses.d_corrupted; },
                    kGradCoords / 2, rng, disc);
      ok = ok && disc.worst <= kGradTol && disc.checked >= kGradCoords;
      parts.push_back(fmt("discriminator loss %.2g/%zu", disc.worst, disc.checked));
    }
    ok = ok && gen.worst <= kGradTol && gen.checked >= kGradCoords;
    parts.push_back(fmt("%s %.2g/%zu", v.name, gen.worst, gen.checked));
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kGradSeconds;
  std::string joined;
  for (const auto& p : parts) joined += (joined.empty() ? "" : "; ") + p;
  report(3, ok,
         fmt("finite differences, max rel err/coords (tol %.0e, floor %.0e): ", kGradTol, kGradFloor) + joined +
             fmt(" [%.1f s, limit %.0f s]", secs, kGradSeconds));
}

void criterion_5() {
  GeneratorConfig g1, g3;
  g1.q_order = 1;
  const double n1 = static_cast<double>(build_generator(g1, 1).parameter_count());
  const double n3 = static_cast<double>(build_generator(g3, 1).parameter_count());
  const double ratio = n3 / n1;
  const bool ok = std::abs(n3 - 781000.0) <= kParamBand * 781000.0 && std::abs(n1 - 260000.0) <= kParamBand * 260000.0 &&
                  ratio >= kRatioLo && ratio <= kRatioHi;
  report(5, ok,
         fmt("GX2C parameters Q=3 %.0f (781000 +-10%%), Q=1 %.0f (260000 +-10%%), ratio %.4f in [%.2f, %.2f]", n3,
             n1, ratio, kRatioLo, kRatioHi));
}

void criterion_6() {
  const auto r = metrics_from_counts(995494, 29458, 30601);
  const double ds = std::abs(*r.sensitivity - 97.04), dp = std::abs(*r.precision - 97.11), df = std::abs(*r.f1 - 97.05);
  report(6, ds <= kMetricTol && dp <= kMetricTol && df <= kMetricTol,
         fmt("Sen %.4f Pre %.4f F1 %.4f vs printed 97.04/97.11/97.05, max deviation %.4f pt (tol %.2f)",
             *r.sensitivity, *r.precision, *r.f1, std::max({ds, dp, df}), kMetricTol));
}

void criterion_7() {
  CorpusOptions o;
  o.count = 100;
  o.bpm_min = 60.0;
  o.bpm_max = 120.0;
  o.seed = 707;
  const auto corpus = make_synthetic_corpus(o);
  bool ok = true;
  std::string text;
  for (const char* name : {"pan-tompkins", "hamilton"}) {
    const Detector det = detector_by_name(name);
    std::vector<MetricsReport> per;
    double slowest = 0.0;
    for (const Record& r : corpus.clean) {
      const auto t0 = Clock::now();
      const auto found = det(r.samples, r.sampling_rate);
      slowest = std::max(slowest, seconds_since(t0));
      std::vector<std::size_t> truth;
      for (const auto& a : r.annotations) truth.push_back(a.sample_index);
      per.push_back(metrics(match_peaks(found.peaks, truth, 75.0), r.annotations));
    }
    const auto pooled = pool_reports(per);
    const double f1 = pooled.f1.value_or(0.0);
    ok = ok && f1 >= kDetectorF1 && slowest < kDetectorSeconds;
    text += fmt("%s%s F1 %.3f%% slowest call %.4f s", text.empty() ? "" : "; ", name, f1, slowest);
  }
  report(7, ok, text + fmt(" (need F1 >= %.0f%%, call < %.0f s)", kDetectorF1, kDetectorSeconds));
}

// Criteria 4, 8 and 9 share the desk-scale training run.
void desk_scale(bool quick) {
  auto opts = [](std::uint64_t seed, std::size_t n) {
    CorpusOptions o;
    o.count = n;
    o.bpm_min = 60.0;
    o.bpm_max = 120.0;
    o.seed = seed;
    o.artifacts.noise_snr_db = 0.0;
    o.artifacts.wander_amplitude_mv = 0.3;
    o.random_cut_s = 1.0;
    return o;
  };
  const auto t0 = Clock::now();
  const auto pool_a = make_synthetic_corpus(opts(101, 256));
  const auto pool_b = make_synthetic_corpus(opts(202, 256));
  const auto held = make_synthetic_corpus(opts(303, 64));
  UnpairedDataset data;
  for (const auto& r : pool_a.clean) data.clean.push_back(normalize(Segment{r.samples}).samples);
  for (const auto& r : pool_b.corrupted) data.corrupted.push_back(normalize(Segment{r.samples}).samples);

  TrainConfig cfg;  // defaults: 1000 iterations, batch 8, lr 1e-5, Q = 3, lambda 10, beta 5
  if (quick) cfg.max_iterations = 20;
  CycleGanModel model = make_model(cfg);
  FitOptions fo;
  fo.on_step = [&](std::uint64_t it, const LossBundle& l) {
    if (it % 50 == 0)
      std::fprintf(stderr, "    iter %llu total %.4f (%.0f s)\n", static_cast<unsigned long long>(it), l.total,
                   seconds_since(t0));
  };
  const auto history = fit(model, data, cfg, fo);

  // 4: bookkeeping on every emitted bundle.
  double worst = 0.0;
  for (const auto& l : history)
    worst = std::max(worst, std::abs(l.total - (l.adv1 + l.adv2 + 10.0 * l.cyc + 5.0 * l.ide)));
  report(4, worst <= kBookkeepingTol && cfg.lambda_cyc == 10.0 && cfg.beta_ide == 5.0,
         fmt("total = adv1+adv2+10 cyc+5 ide over %zu bundles: max |diff| %.3g (tol %.0e)", history.size(), worst,
             kBookkeepingTol));

  // 8: SNR in the normalized domain against the known clean reference.
  std::vector<double> snr_in, snr_out;
  for (std::size_t i = 0; i < held.clean.size(); ++i) {
    const auto c = normalize(Segment{held.clean[i].samples}).samples;
    const auto x = normalize(Segment{held.corrupted[i].samples}).samples;
    snr_in.push_back(snr_db(c, x));
    snr_out.push_back(snr_db(c, restore_segment(model, x, 1)));
  }
  const double gain = median(snr_out) - median(snr_in);
  const auto one = evaluate_restoration(held.corrupted, model.gx2c, "pan-tompkins", 1);
  const auto two = evaluate_restoration(held.corrupted, model.gx2c, "pan-tompkins", 2);
  const double f1_orig = one.pooled_original.f1.value_or(0.0);
  const double f1_one = one.pooled_restored.f1.value_or(0.0);
  const double f1_two = two.pooled_restored.f1.value_or(0.0);
  const double secs = seconds_since(t0);
  const bool a_ok = gain >= kSnrGainDb, b_ok = f1_one - f1_orig >= kF1GainPts;
  report(8, a_ok && b_ok && secs <= kTrainSeconds && !quick,
         fmt("%s(a) median SNR %.2f -> %.2f dB, gain %.2f dB (need >= %.0f) %s; (b) Pan-Tompkins F1 %.2f -> %.2f, "
             "gain %.2f pt (need >= %.0f) %s; %zu iterations in %.0f s (limit %.0f s)",
             quick ? "[quick run, not binding] " : "", median(snr_in), median(snr_out), gain, kSnrGainDb,
             a_ok ? "ok" : "MISSED", f1_orig, f1_one, f1_one - f1_orig, kF1GainPts, b_ok ? "ok" : "MISSED",
             history.size(), secs, kTrainSeconds));

  // 9: two passes, bitwise, on segments and on whole records, then the F1 margin.
  bool bitwise = true;
  const SegmentRestorer r1 = generator_restorer(model.gx2c);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto x = normalize(Segment{held.corrupted[i].samples}).samples;
    bitwise = bitwise && restore_segment(model, x, 2) == restore_segment(model, restore_segment(model, x, 1), 1);
    Record once = held.corrupted[i];
    once.samples = restore_record_signal(held.corrupted[i], r1, 1);
    bitwise = bitwise && restore_record_signal(held.corrupted[i], r1, 2) == restore_record_signal(once, r1, 1);
  }
  report(9, bitwise && f1_two >= f1_one - kTwoPassSlack && !quick,
         fmt("%spasses=2 bitwise equal to two passes=1: %s; F1 two-pass %.2f vs one-pass %.2f (need >= one-pass - "
             "%.1f)",
             quick ? "[quick run, not binding] " : "", bitwise ? "yes" : "NO", f1_two, f1_one, kTwoPassSlack));
}

void criterion_10() {
  auto opts = [](std::uint64_t seed) {
    CorpusOptions o;
    o.count = 32;
    o.bpm_max = 120.0;
    o.seed = seed;
    o.artifacts.noise_snr_db = 0.0;
    o.artifacts.wander_amplitude_mv = 0.3;
    o.random_cut_s = 1.0;
    return o;
  };
  const auto a = make_synthetic_corpus(opts(11));
  const auto b = make_synthetic_corpus(opts(12));
  UnpairedDataset data;
  for (const auto& r : a.clean) data.clean.push_back(normalize(Segment{r.samples}).samples);
  for (const auto& r : b.corrupted) data.corrupted.push_back(normalize(Segment{r.samples}).samples);
  TrainConfig cfg;
  cfg.max_iterations = 10;
  CycleGanModel m1 = make_model(cfg), m2 = make_model(cfg);
  const auto h1 = fit(m1, data, cfg);
  const auto h2 = fit(m2, data, cfg);
  const bool bundles = h1.size() == 10 && h1 == h2;
  const bool loss_csv = loss_history_csv(h1) == loss_history_csv(h2);

  // CLI outputs from two independent runs.
  TempDir d("acceptance10");
  auto run = [](std::vector<std::string> args) {
    args.insert(args.begin(), "ecgr");
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
  };
  bool files = true;
  std::size_t compared = 0;
  for (const char* tag : {"x", "y"}) {
    const std::string root = (d / tag).string();
    files = files && run({"synth", "--out", root + "/data", "--count", "6", "--duration-s", "20", "--seed", "5"}) == 0;
    files = files && run({"evaluate", "--truth", root + "/data/clean", "--signals", "orig=" + root + "/data/corrupted",
                          "--out", root + "/report.csv"}) == 0;
    files = files && run({"plot", "--input", root + "/data/corrupted/synth_0002.csv", "--segment-index", "1", "--out",
                          root + "/plot"}) == 0;
    write_text_file(d / tag / "loss_history.csv", loss_history_csv(std::string(tag) == "x" ? h1 : h2));
  }
  for (const char* f : {"data/clean/synth_0000.csv", "data/clean/synth_0005.ann.csv", "data/corrupted/synth_0003.csv",
                        "report.csv", "plot/synth_0002_seg1.svg", "plot/synth_0002_seg1.csv", "loss_history.csv"}) {
    files = files && read_text_file(d / "x" / f) == read_text_file(d / "y" / f);
    ++compared;
  }
  report(10, bundles && loss_csv && files,
         fmt("first 10 LossBundles bitwise equal: %s; %zu CSV/SVG outputs byte-identical: %s", bundles ? "yes" : "NO",
             compared, loss_csv && files ? "yes" : "NO"));
}

void criterion_11() {
  std::mt19937_64 rng(1011);
  std::normal_distribution<double> g(0.0, 2.0);
  bool extremes = true;
  double worst = 0.0;
  for (std::size_t t = 0; t < 200; ++t) {
    Segment s;
    s.samples.resize(4000);
    for (double& v : s.samples) v = g(rng) + static_cast<double>(t);
    const auto n = normalize(s);
    extremes = extremes && *std::min_element(n.samples.begin(), n.samples.end()) == -1.0 &&
               *std::max_element(n.samples.begin(), n.samples.end()) == 1.0;
    worst = std::max(worst, max_abs_diff(denormalize(n).samples, s.samples));
  }
  Segment flat;
  flat.samples.assign(4000, 0.42);
  const auto nf = normalize(flat);
  const bool degenerate = nf.degenerate && std::all_of(nf.samples.begin(), nf.samples.end(), [](double v) { return v == 0.0; }) &&
                          denormalize(nf).samples == flat.samples;
  report(11, extremes && worst <= kRoundTripTol && degenerate,
         fmt("extremes exactly +-1: %s; round-trip max error %.3g (tol %.0e); constant segment -> zeros and back: %s",
             extremes ? "yes" : "NO", worst, kRoundTripTol, degenerate ? "yes" : "NO"));
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  const auto t0 = Clock::now();
  auto guard = [](int id, const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  };
  guard(1, criterion_1);
  guard(2, criterion_2);
  guard(3, criterion_3);
  guard(5, criterion_5);
  guard(6, criterion_6);
  guard(7, criterion_7);
  guard(11, criterion_11);
  guard(10, criterion_10);
  guard(8, [&] { desk_scale(quick); });
  // A throw in the shared run leaves 4 and 9 without a verdict.
  for (int id : {4, 9})
    if (std::none_of(verdicts.begin(), verdicts.end(), [&](const Verdict& v) { return v.id == id; }))
      report(id, false, "not reached: the desk-scale run failed");

  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  std::size_t passed = 0;
  for (const auto& v : verdicts) {
    std::printf("[%s] criterion %d: %s\n", v.pass ? "PASS" : "FAIL", v.id, v.text.c_str());
    passed += v.pass;
  }
  std::printf("%zu/%zu criteria passed in %.0f s\n", passed, verdicts.size(), seconds_since(t0));
  return passed == verdicts.size() ? 0 : 1;
}
