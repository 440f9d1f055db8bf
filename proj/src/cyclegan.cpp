#include "ecgr/cyclegan.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "ecgr/errors.hpp"

namespace ecgr {

void TrainConfig::validate() const {
  if (!(lambda_cyc >= 0.0) || !(beta_ide >= 0.0)) throw ConfigError("lambda and beta must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (q_order < 1) throw ConfigError("q_order must be >= 1");
}

bool LossBundle::all_finite() const {
  for (double v : {adv1, adv2, cyc, ide, total, d_clean, d_corrupted})
    if (!std::isfinite(v)) return false;
  return true;
}

double total_generator_loss(double adv1, double adv2, double cyc, double ide, double lambda_cyc,
                            double beta_ide) {
  return adv1 + adv2 + lambda_cyc * cyc + beta_ide * ide;
}

// ---------------------------------------------------------------------------
// Loss primitives

double lsgan_generator_loss(const FeatureMap& scores) {
  double s = 0.0;
  for (double v : scores.values()) s += (1.0 - v) * (1.0 - v);
  return s / static_cast<double>(scores.size());
}

FeatureMap lsgan_generator_loss_grad(const FeatureMap& scores) {
  FeatureMap g(scores.batch(), scores.channels(), scores.length());
  const double n = static_cast<double>(scores.size());
  auto gv = g.values();
  const auto sv = scores.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = -2.0 * (1.0 - sv[i]) / n;
  return g;
}

namespace {

double mean_square_from(const FeatureMap& x, double target) {
  double s = 0.0;
  for (double v : x.values()) s += (v - target) * (v - target);
  return s / static_cast<double>(x.size());
}

// d/ds of 0.5 mean (s - target)^2
FeatureMap half_mse_grad(const FeatureMap& s, double target) {
  FeatureMap g(s.batch(), s.channels(), s.length());
  const double n = static_cast<double>(s.size());
  auto gv = g.values();
  const auto sv = s.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = (sv[i] - target) / n;
  return g;
}

void scale(FeatureMap& x, double k) {
  for (double& v : x.values()) v *= k;
}

}  // namespace

double lsgan_discriminator_loss(const FeatureMap& real_scores, const FeatureMap& fake_scores) {
  return 0.5 * (mean_square_from(real_scores, 1.0) + mean_square_from(fake_scores, 0.0));
}

double l1_loss(const FeatureMap& a, const FeatureMap& b) {
  if (!a.same_shape(b)) throw ConfigError("l1_loss: shape mismatch");
  double s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  return s / static_cast<double>(av.size());
}

FeatureMap l1_loss_grad(const FeatureMap& a, const FeatureMap& b) {
  if (!a.same_shape(b)) throw ConfigError("l1_loss_grad: shape mismatch");
  FeatureMap g(a.batch(), a.channels(), a.length());
  const double inv = 1.0 / static_cast<double>(a.size());
  auto gv = g.values();
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    const double d = av[i] - bv[i];
    gv[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
  }
  return g;
}

double gen_adversarial_loss(const SignalMap& discriminator, const SignalMap& generator,
                            const FeatureMap& batch) {
  return lsgan_generator_loss(discriminator(generator(batch)));
}

double discriminator_loss(const SignalMap& discriminator, const FeatureMap& real_batch,
                          const FeatureMap& fake_batch) {
  return lsgan_discriminator_loss(discriminator(real_batch), discriminator(fake_batch));
}

double cycle_loss(const SignalMap& gx2c, const SignalMap& gc2x, const FeatureMap& x_corrupted,
                  const FeatureMap& x_clean) {
  return l1_loss(gc2x(gx2c(x_corrupted)), x_corrupted) + l1_loss(gx2c(gc2x(x_clean)), x_clean);
}

double identity_loss(const SignalMap& gx2c, const SignalMap& gc2x, const FeatureMap& x_corrupted,
                     const FeatureMap& x_clean) {
  return l1_loss(gx2c(x_clean), x_clean) + l1_loss(gc2x(x_corrupted), x_corrupted);
}

SignalMap as_map(const Generator& g) {
  return [&g](const FeatureMap& x) { return g.forward(x); };
}

SignalMap as_map(const Discriminator& d) {
  return [&d](const FeatureMap& x) { return d.forward(x); };
}

// ---------------------------------------------------------------------------
// Model

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

AdamState make_adam(std::size_t n, const TrainConfig& cfg) {
  AdamState s(n, cfg.lr);
  s.beta1 = cfg.adam_beta1;
  s.beta2 = cfg.adam_beta2;
  s.epsilon = cfg.adam_epsilon;
  return s;
}

}  // namespace

CycleGanModel::CycleGanModel(const GeneratorConfig& gcfg, const DiscriminatorConfig& dcfg,
                             const TrainConfig& cfg)
    : gx2c(gcfg, derive_seed(cfg.seed, 1)),
      gc2x(gcfg, derive_seed(cfg.seed, 2)),
      dc(dcfg, derive_seed(cfg.seed, 3)),
      dx(dcfg, derive_seed(cfg.seed, 4)),
      opt_gx2c(make_adam(gx2c.parameter_count(), cfg)),
      opt_gc2x(make_adam(gc2x.parameter_count(), cfg)),
      opt_dc(make_adam(dc.parameter_count(), cfg)),
      opt_dx(make_adam(dx.parameter_count(), cfg)),
      seed(cfg.seed) {}

CycleGanModel make_model(const TrainConfig& cfg) {
  cfg.validate();
  GeneratorConfig g;
  g.q_order = cfg.q_order;
  DiscriminatorConfig d;
  d.q_order = cfg.q_order;
  return CycleGanModel(g, d, cfg);
}

// ---------------------------------------------------------------------------
// Training

namespace {

FeatureMap concat2(const FeatureMap& a, const FeatureMap& b) {
  const FeatureMap parts[2] = {a, b};
  return concat_batch(parts);
}

void check_batches(const FeatureMap& clean, const FeatureMap& corrupted) {
  if (!clean.same_shape(corrupted))
    throw ConfigError("train_step: clean and corrupted batches must have the same shape");
  if (clean.batch() == 0) throw ConfigError("train_step: empty batch");
}

std::string describe(const LossBundle& l) {
  std::ostringstream os;
  os << "adv1=" << l.adv1 << " adv2=" << l.adv2 << " cyc=" << l.cyc << " ide=" << l.ide
     << " d_clean=" << l.d_clean << " d_corrupted=" << l.d_corrupted;
  return os.str();
}

}  // namespace

CycleGanGradients compute_gradients(const CycleGanModel& model, const FeatureMap& clean_batch,
                                    const FeatureMap& corrupted_batch, const TrainConfig& cfg) {
  check_batches(clean_batch, corrupted_batch);
  const std::size_t b = clean_batch.batch();
  const FeatureMap& x_c = clean_batch;
  const FeatureMap& x_x = corrupted_batch;

  // Forward passes. GX2C sees [x_X; x_C] (translation + identity), GC2X sees [x_C; x_X].
  GeneratorTrace ta, tb, tc, td;
  const FeatureMap out_a = model.gx2c.forward(concat2(x_x, x_c), ta);
  const FeatureMap out_b = model.gc2x.forward(concat2(x_c, x_x), tb);
  const FeatureMap fake_c = slice_batch(out_a, 0, b);
  const FeatureMap id_c = slice_batch(out_a, b, b);
  const FeatureMap fake_x = slice_batch(out_b, 0, b);
  const FeatureMap id_x = slice_batch(out_b, b, b);
  const FeatureMap rec_x = model.gc2x.forward(fake_c, tc);
  const FeatureMap rec_c = model.gx2c.forward(fake_x, td);

  DiscriminatorTrace dc_fake, dc_real, dx_fake, dx_real;
  const FeatureMap s_fake_c = model.dc.forward(fake_c, dc_fake);
  const FeatureMap s_real_c = model.dc.forward(x_c, dc_real);
  const FeatureMap s_fake_x = model.dx.forward(fake_x, dx_fake);
  const FeatureMap s_real_x = model.dx.forward(x_x, dx_real);

  CycleGanGradients out;
  LossBundle& l = out.losses;
  l.adv1 = lsgan_generator_loss(s_fake_c);
  l.adv2 = lsgan_generator_loss(s_fake_x);
  l.cyc = l1_loss(rec_x, x_x) + l1_loss(rec_c, x_c);
  l.ide = l1_loss(id_c, x_c) + l1_loss(id_x, x_x);
  l.total = total_generator_loss(l.adv1, l.adv2, l.cyc, l.ide, cfg.lambda_cyc, cfg.beta_ide);
  l.d_clean = lsgan_discriminator_loss(s_real_c, s_fake_c);
  l.d_corrupted = lsgan_discriminator_loss(s_real_x, s_fake_x);
  if (!l.all_finite()) throw TrainingDivergence("non-finite loss: " + describe(l));

  out.gx2c = model.gx2c.make_gradients();
  out.gc2x = model.gc2x.make_gradients();
  out.dc = model.dc.make_gradients();
  out.dx = model.dx.make_gradients();

  // Generator objective. Discriminators only pass gradients through.
  FeatureMap g_fake_c = model.dc.backward(dc_fake, lsgan_generator_loss_grad(s_fake_c), nullptr, true);
  FeatureMap g_fake_x = model.dx.backward(dx_fake, lsgan_generator_loss_grad(s_fake_x), nullptr, true);

  FeatureMap g_rec_x = l1_loss_grad(rec_x, x_x);
  scale(g_rec_x, cfg.lambda_cyc);
  g_fake_c += model.gc2x.backward(tc, g_rec_x, &out.gc2x, true);
  FeatureMap g_rec_c = l1_loss_grad(rec_c, x_c);
  scale(g_rec_c, cfg.lambda_cyc);
  g_fake_x += model.gx2c.backward(td, g_rec_c, &out.gx2c, true);

  FeatureMap g_id_c = l1_loss_grad(id_c, x_c);
  scale(g_id_c, cfg.beta_ide);
  FeatureMap g_id_x = l1_loss_grad(id_x, x_x);
  scale(g_id_x, cfg.beta_ide);
  model.gx2c.backward(ta, concat2(g_fake_c, g_id_c), &out.gx2c, false);
  model.gc2x.backward(tb, concat2(g_fake_x, g_id_x), &out.gc2x, false);

  // Discriminator objective with the generated batches held constant.
  model.dc.backward(dc_real, half_mse_grad(s_real_c, 1.0), &out.dc, false);
  model.dc.backward(dc_fake, half_mse_grad(s_fake_c, 0.0), &out.dc, false);
  model.dx.backward(dx_real, half_mse_grad(s_real_x, 1.0), &out.dx, false);
  model.dx.backward(dx_fake, half_mse_grad(s_fake_x, 0.0), &out.dx, false);
  return out;
}

namespace {

template <typename Net>
void adam_update(Net& net, const GradientSet& grads, AdamState& state) {
  std::vector<std::span<double>> params;
  for (auto& blk : net.parameters()) params.push_back(blk.values);
  const auto views = grads.views();
  adam_step(std::span<const std::span<double>>(params), std::span<const std::span<const double>>(views), state);
}

}  // namespace

void apply_generator_update(CycleGanModel& model, const CycleGanGradients& grads) {
  adam_update(model.gx2c, grads.gx2c, model.opt_gx2c);
  adam_update(model.gc2x, grads.gc2x, model.opt_gc2x);
}

void apply_discriminator_update(CycleGanModel& model, const CycleGanGradients& grads) {
  adam_update(model.dc, grads.dc, model.opt_dc);
  adam_update(model.dx, grads.dx, model.opt_dx);
}

LossBundle train_step(CycleGanModel& model, const FeatureMap& clean_batch,
                      const FeatureMap& corrupted_batch, const TrainConfig& cfg) {
  const CycleGanGradients grads = compute_gradients(model, clean_batch, corrupted_batch, cfg);
  apply_generator_update(model, grads);
  apply_discriminator_update(model, grads);
  ++model.iteration;
  return grads.losses;
}

std::vector<std::size_t> draw_batch_indices(std::uint64_t seed, std::uint64_t iteration,
                                            std::size_t stream, std::size_t pool_size,
                                            std::size_t batch) {
  if (pool_size == 0) throw ConfigError("cannot sample from an empty pool");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, pool_size - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

FeatureMap gather_batch(const std::vector<std::vector<double>>& pool, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ConfigError("gather_batch: no indices");
  const std::size_t length = pool.at(indices[0]).size();
  FeatureMap out(indices.size(), 1, length);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& seg = pool.at(indices[b]);
    if (seg.size() != length) throw ConfigError("gather_batch: segments differ in length");
    std::copy(seg.begin(), seg.end(), out.row(b, 0).begin());
  }
  return out;
}

std::vector<LossBundle> fit(CycleGanModel& model, const UnpairedDataset& data, const TrainConfig& cfg,
                            const FitOptions& options) {
  cfg.validate();
  if (data.clean.empty() || data.corrupted.empty())
    throw ConfigError("fit: both the clean and the corrupted pool must be non-empty");
  std::vector<LossBundle> history;
  while (model.iteration < cfg.max_iterations) {
    const std::uint64_t it = model.iteration;
    const auto ci = draw_batch_indices(cfg.seed, it, 0, data.clean.size(), cfg.batch_size);
    const auto xi = draw_batch_indices(cfg.seed, it, 1, data.corrupted.size(), cfg.batch_size);
    const LossBundle l = train_step(model, gather_batch(data.clean, ci), gather_batch(data.corrupted, xi), cfg);
    history.push_back(l);
    if (options.on_step) options.on_step(model.iteration, l);
    if (options.checkpoint_every > 0 && options.checkpoint_sink &&
        model.iteration % options.checkpoint_every == 0)
      options.checkpoint_sink(model);
  }
  return history;
}

std::string loss_history_csv(std::span<const LossBundle> history, std::uint64_t first_iteration) {
  std::string out = "iter,adv1,adv2,cyc,ide,total,d_clean,d_corrupted\n";
  char buf[512];
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& l = history[i];
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<unsigned long long>(first_iteration + i), l.adv1, l.adv2, l.cyc, l.ide,
                  l.total, l.d_clean, l.d_corrupted);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Restoration

FeatureMap restore_segment(const Generator& gx2c, const FeatureMap& segment, std::size_t passes) {
  if (passes < 1) throw InputError("restore: passes must be >= 1");
  for (double v : segment.values())
    if (!(std::abs(v) <= 1.0 + 1e-9))
      throw InputError("restore: segment is not normalized to [-1, 1]");
  FeatureMap x = segment;
  for (std::size_t p = 0; p < passes; ++p) x = gx2c.forward(x);
  return x;
}

std::vector<double> restore_segment(const CycleGanModel& model, std::span<const double> segment,
                                    std::size_t passes) {
  FeatureMap x(1, 1, segment.size(), std::vector<double>(segment.begin(), segment.end()));
  return restore_segment(model.gx2c, x, passes).storage();
}

}  // namespace ecgr
