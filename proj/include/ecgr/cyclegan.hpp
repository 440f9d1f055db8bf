#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecgr/models.hpp"
#include "ecgr/numerics.hpp"

namespace ecgr {

struct TrainConfig {
  double lambda_cyc = 10.0;
  double beta_ide = 5.0;
  double lr = 1e-5;
  std::size_t max_iterations = 1000;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  std::size_t q_order = 3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct LossBundle {
  double adv1 = 0.0;         // (1 - DC(GX2C(x_X)))^2
  double adv2 = 0.0;         // (1 - DX(GC2X(x_C)))^2
  double cyc = 0.0;
  double ide = 0.0;
  double total = 0.0;        // adv1 + adv2 + lambda cyc + beta ide
  double d_clean = 0.0;
  double d_corrupted = 0.0;

  bool all_finite() const;
  friend bool operator==(const LossBundle&, const LossBundle&) = default;
};

double total_generator_loss(double adv1, double adv2, double cyc, double ide, double lambda_cyc,
                            double beta_ide);

// Any batch -> batch mapping; lets the loss definitions run on stand-in networks.
using SignalMap = std::function<FeatureMap(const FeatureMap&)>;

// mean over batch and score positions of (1 - s)^2
double lsgan_generator_loss(const FeatureMap& scores);
FeatureMap lsgan_generator_loss_grad(const FeatureMap& scores);
// 0.5 [mean (D(real) - 1)^2 + mean D(fake)^2]
double lsgan_discriminator_loss(const FeatureMap& real_scores, const FeatureMap& fake_scores);
// mean |a - b| and its gradient with respect to a (0 where a == b)
double l1_loss(const FeatureMap& a, const FeatureMap& b);
FeatureMap l1_loss_grad(const FeatureMap& a, const FeatureMap& b);

double gen_adversarial_loss(const SignalMap& discriminator, const SignalMap& generator,
                            const FeatureMap& batch);
double discriminator_loss(const SignalMap& discriminator, const FeatureMap& real_batch,
                          const FeatureMap& fake_batch);
// |GC2X(GX2C(x_X)) - x_X| + |GX2C(GC2X(x_C)) - x_C|, each a mean absolute error
double cycle_loss(const SignalMap& gx2c, const SignalMap& gc2x, const FeatureMap& x_corrupted,
                  const FeatureMap& x_clean);
// |GX2C(x_C) - x_C| + |GC2X(x_X) - x_X|
double identity_loss(const SignalMap& gx2c, const SignalMap& gc2x, const FeatureMap& x_corrupted,
                     const FeatureMap& x_clean);

SignalMap as_map(const Generator& g);
SignalMap as_map(const Discriminator& d);

/**
 * Two generators (GX2C: corrupted -> clean, GC2X: clean -> corrupted), two
 * discriminators (DC judges clean, DX judges corrupted) and their Adam states.
 * `iteration` counts completed training steps.
 */
struct CycleGanModel {
  Generator gx2c;
  Generator gc2x;
  Discriminator dc;
  Discriminator dx;
  AdamState opt_gx2c;
  AdamState opt_gc2x;
  AdamState opt_dc;
  AdamState opt_dx;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;

  CycleGanModel() = default;
  CycleGanModel(const GeneratorConfig& gcfg, const DiscriminatorConfig& dcfg, const TrainConfig& cfg);
};

// Default architecture with q_order taken from cfg.
CycleGanModel make_model(const TrainConfig& cfg);

struct CycleGanGradients {
  LossBundle losses;
  GradientSet gx2c;
  GradientSet gc2x;
  GradientSet dc;
  GradientSet dx;
};

// Losses and gradients for one iteration without touching the model.
// Generator gradients are of the total objective with the discriminators
// fixed; discriminator gradients use the generated batches as constants.
// Throws TrainingDivergence on a non-finite loss.
CycleGanGradients compute_gradients(const CycleGanModel& model, const FeatureMap& clean_batch,
                                    const FeatureMap& corrupted_batch, const TrainConfig& cfg);
void apply_generator_update(CycleGanModel& model, const CycleGanGradients& grads);
void apply_discriminator_update(CycleGanModel& model, const CycleGanGradients& grads);

// Generators first, then both discriminators. Increments model.iteration.
LossBundle train_step(CycleGanModel& model, const FeatureMap& clean_batch,
                      const FeatureMap& corrupted_batch, const TrainConfig& cfg);

// Normalized segments of the two unpaired domains.
struct UnpairedDataset {
  std::vector<std::vector<double>> clean;
  std::vector<std::vector<double>> corrupted;
};

// Batch indices for one iteration, a pure function of (seed, iteration, pool).
std::vector<std::size_t> draw_batch_indices(std::uint64_t seed, std::uint64_t iteration,
                                            std::size_t stream, std::size_t pool_size,
                                            std::size_t batch);
FeatureMap gather_batch(const std::vector<std::vector<double>>& pool, std::span<const std::size_t> indices);

struct FitOptions {
  std::size_t checkpoint_every = 0;  // 0: none
  std::function<void(const CycleGanModel&)> checkpoint_sink;
  std::function<void(std::uint64_t iteration, const LossBundle&)> on_step;
};

// Trains from model.iteration up to cfg.max_iterations and returns the
// bundles of the steps it ran.
std::vector<LossBundle> fit(CycleGanModel& model, const UnpairedDataset& data, const TrainConfig& cfg,
                            const FitOptions& options = {});

// Columns iter,adv1,adv2,cyc,ide,total,d_clean,d_corrupted; iterations are 1-based.
std::string loss_history_csv(std::span<const LossBundle> history, std::uint64_t first_iteration = 1);

// passes-fold composition of GX2C; rejects inputs outside [-1, 1] (slack 1e-9).
FeatureMap restore_segment(const Generator& gx2c, const FeatureMap& segment, std::size_t passes);
std::vector<double> restore_segment(const CycleGanModel& model, std::span<const double> segment,
                                    std::size_t passes);

}  // namespace ecgr
