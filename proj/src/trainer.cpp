// SPDX-License-Identifier: Apache-2.0

#include "ogc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "ogc/loss_queue.hpp"

namespace ogc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Dataset make_source(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
  if (cfg.dataset == "moons") return make_moons(n, cfg.moons_noise, seed);
  BlobsOptions opt;
  opt.n = n;
  opt.num_classes = static_cast<int>(cfg.num_classes);
  opt.dim = static_cast<std::size_t>(cfg.dim);
  opt.radius = cfg.blob_radius;
  opt.spread = cfg.blob_spread;
  return make_blobs(opt, seed);
}

// Ratio of mean clipped gradient norms between flipped and clean queue entries.
double flip_mask_ratio(const LossQueue& queue, const BaseLoss& base, double tau) {
  const auto values = queue.values();
  const auto flags = queue.flags();
  double sum[2] = {0.0, 0.0};
  double cnt[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (flags[i] < 0) continue;
    const double g = std::min(grad_norm(base, std::max(std::exp(-values[i]), kProbFloor)), tau);
    sum[flags[i]] += g;
    cnt[flags[i]] += 1.0;
  }
  if (cnt[0] == 0.0 || cnt[1] == 0.0) return kNaN;
  return (sum[1] / cnt[1]) / (sum[0] / cnt[0]);
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  Dataset train_clean;
  Dataset test;
  if (cfg.dataset == "idx") {
    train_clean = load_idx(cfg.idx_train_images, cfg.idx_train_labels, static_cast<std::size_t>(cfg.n_train));
    test = load_idx(cfg.idx_test_images, cfg.idx_test_labels, static_cast<std::size_t>(cfg.n_test));
    const int k = std::max(train_clean.num_classes, test.num_classes);
    train_clean.num_classes = test.num_classes = k;
  } else {
    train_clean = make_source(cfg, static_cast<std::size_t>(cfg.n_train), cfg.data_seed);
    test = make_source(cfg, static_cast<std::size_t>(cfg.n_test), cfg.data_seed + 0x5bd1e995ULL);
  }
  PreparedData out;
  if (cfg.noise == "none" || cfg.noise_rate == 0.0) {
    out.train.data = train_clean;
    out.train.true_labels = train_clean.labels;
    out.train.flip_mask.assign(train_clean.size(), false);
  } else {
    out.train = corrupt(train_clean, cfg.noise_spec(), cfg.noise_seed);
  }
  out.test = std::move(test);
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x6f6763u};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<std::size_t> model_dims(const ExperimentConfig& cfg, const Dataset& data) {
  std::vector<std::size_t> dims{data.dim};
  for (double h : cfg.hidden) dims.push_back(static_cast<std::size_t>(h));
  dims.push_back(static_cast<std::size_t>(data.num_classes));
  return dims;
}

LrSchedule lr_schedule(const ExperimentConfig& cfg) {
  LrSchedule s;
  s.initial = cfg.lr;
  s.decay_factor = cfg.lr_decay;
  for (double m : cfg.lr_milestones) s.milestones.push_back(static_cast<int>(m));
  s.validate();
  return s;
}

long steps_per_epoch(const ExperimentConfig& cfg, std::size_t n_train) {
  return static_cast<long>((n_train + static_cast<std::size_t>(cfg.batch_size) - 1) /
                           static_cast<std::size_t>(cfg.batch_size));
}

TrainResult train(const ExperimentConfig& cfg) { return train(cfg, prepare_data(cfg)); }

TrainResult train(const ExperimentConfig& cfg, const PreparedData& data, const TrainHooks& hooks) {
  cfg.validate();
  const Dataset& train_set = data.train.data;
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  train_set.validate();

  const BaseLoss base = cfg.base_loss();
  const std::size_t n = train_set.size();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const long per_epoch = steps_per_epoch(cfg, n);
  const long total_steps = per_epoch * cfg.epochs;
  const LrSchedule schedule = lr_schedule(cfg);
  const ThresholdStrategy strategy = cfg.threshold_strategy(total_steps);
  const bool needs_fit = std::holds_alternative<OptimizedStrategy>(strategy);
  const bool clipping = cfg.uses_clipping();
  const bool know_flips = data.train.flip_mask.size() == n;

  EmConfig em;
  em.max_iters = static_cast<int>(cfg.em_max_iters);
  em.tol = cfg.em_tol;

  TrainResult result;
  result.total_steps = total_steps;
  result.model = MlpModel::he_uniform(model_dims(cfg, train_set), cfg.seed);
  MlpModel& model = result.model;
  OptimizerState opt = OptimizerState::for_model(model, cfg.lr, cfg.momentum, cfg.weight_decay, cfg.param_clip);

  LossQueue queue(static_cast<std::size_t>(cfg.queue_size));
  ThresholdState state = initial_threshold_state(strategy);
  state.ratio = kNaN;
  std::optional<GmmFit> last_fit;
  double last_true_ratio = kNaN;

  std::vector<ForwardCache> caches(batch);
  std::vector<double> h_batch(batch);
  std::vector<double> grad_logits(model.num_classes());
  ParamGrads grads = model.zero_grads();

  long t = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.lr = schedule.at(epoch);
    const auto order = epoch_order(n, cfg.seed, epoch);
    std::size_t clipped_in_epoch = 0;

    for (std::size_t start = 0; start < n; start += batch) {
      ++t;
      const std::size_t m = std::min(batch, n - start);

      for (std::size_t b = 0; b < m; ++b) {
        const std::size_t idx = order[start + b];
        const auto logits = forward(model, train_set.row(idx), caches[b]);
        h_batch[b] = ce_from_logits(logits, static_cast<std::size_t>(train_set.labels[idx]));
        queue.push(h_batch[b], know_flips ? std::optional<bool>(data.train.flip_mask[idx]) : std::nullopt);
      }

      if (t % cfg.time_frame == 0) {
        const bool warm = queue.size() >= static_cast<std::size_t>(cfg.warmup);
        std::optional<GmmFit> fit;
        if (warm) fit = fit_2gmm(queue.values(), em);
        if (needs_fit && !warm) {
          state.current_tau = kTauCap;
          state.step = t;
          state.status = SolveStatus::CarriedForward;
        } else {
          state = schedule_next(strategy, state, t, opt.lr, fit, base, static_cast<int>(cfg.quad_bins));
        }
        if (fit) {
          last_fit = fit;
          last_true_ratio = flip_mask_ratio(queue, base, state.current_tau);
        }
        result.updates.push_back({t, state.current_tau, fit ? state.ratio : kNaN, fit ? last_true_ratio : kNaN,
                                  state.status, warm});
      }

      const HuberizedLoss hub =
          clipping ? HuberizedLoss::make(base, state.current_tau) : HuberizedLoss{base, INFINITY, 0.0};

      for (auto& l : grads) {
        std::fill(l.weight.begin(), l.weight.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
      }
      double batch_loss = 0.0;
      const double inv_m = 1.0 / static_cast<double>(m);
      for (std::size_t b = 0; b < m; ++b) {
        const std::size_t idx = order[start + b];
        const auto y = static_cast<std::size_t>(train_set.labels[idx]);
        const double p_y = huberized_grad_logits_into(hub, caches[b].acts.back(), y, grad_logits);
        const double p_eval = std::max(p_y, kProbFloor);
        if (hub.clips(p_eval)) ++clipped_in_epoch;
        batch_loss += hub.clips(p_eval) ? huberized_value(hub, p_eval) : phi_h_to_loss(base, h_batch[b]);
        for (double& g : grad_logits) g *= inv_m;
        backward(model, caches[b], grad_logits, grads);
      }
      if (!std::isfinite(batch_loss)) throw TrainingError("non-finite loss", t);
      try {
        sgd_step(model, opt, grads);
      } catch (const NonFiniteGradientError& e) {
        throw TrainingError(e.what(), t);
      }
    }

    MetricsRecord rec;
    rec.step = t;
    rec.epoch = epoch + 1;
    rec.train_acc = evaluate(model, train_set);
    rec.test_acc = data.test.empty() ? kNaN : evaluate(model, data.test);
    rec.tau = clipping ? HuberizedLoss::make(base, state.current_tau).tau : INFINITY;
    rec.ratio = last_fit ? state.ratio : kNaN;
    rec.fit = last_fit;
    rec.clip_frac = static_cast<double>(clipped_in_epoch) / static_cast<double>(n);
    rec.true_ratio = last_true_ratio;
    result.metrics.push_back(rec);
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch + 1, model);
  }
  return result;
}

int predict(const MlpModel& model, std::span<const double> features) {
  const auto logits = forward(model, features);
  int best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

double evaluate(const MlpModel& model, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  ForwardCache cache;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto logits = forward(model, data.row(i), cache);
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k) {
      if (logits[k] > logits[best]) best = k;
    }
    if (static_cast<int>(best) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double last_epochs_mean_accuracy(const std::vector<MetricsRecord>& metrics, std::size_t n) {
  if (metrics.empty()) throw std::invalid_argument("no metrics recorded");
  const std::size_t k = std::min(n, metrics.size());
  double s = 0.0;
  for (std::size_t i = metrics.size() - k; i < metrics.size(); ++i) s += metrics[i].test_acc;
  return s / static_cast<double>(k);
}

void export_distribution(const MlpModel& model, const CorruptedDataset& data, const BaseLoss& base,
                         const std::filesystem::path& path) {
  if (data.flip_mask.size() != data.data.size()) throw std::invalid_argument("flip mask missing");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(10);
  out << "index,H,grad_norm,flipped\n";
  ForwardCache cache;
  for (std::size_t i = 0; i < data.data.size(); ++i) {
    const auto logits = forward(model, data.data.row(i), cache);
    const double h = ce_from_logits(logits, static_cast<std::size_t>(data.data.labels[i]));
    const double g = grad_norm(base, std::max(std::exp(-h), kProbFloor));
    out << i << ',' << h << ',' << g << ',' << (data.flip_mask[i] ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace ogc
