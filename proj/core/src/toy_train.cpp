#include "docparse/toy_train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "docparse/errors.hpp"
#include "docparse/gk_cel.hpp"
#include "docparse/rng.hpp"

namespace docparse::toy {

namespace {

// Salts for the independent streams derived from one seed.
constexpr std::uint64_t kSaltTrainScene = 11;
constexpr std::uint64_t kSaltNoise = 12;
constexpr std::uint64_t kSaltTestScene = 13;
constexpr std::uint64_t kSaltInit = 21;
constexpr std::uint64_t kSaltOrder = 22;

std::vector<int> shifted_input(int bos, const std::vector<int>& target) {
  std::vector<int> in;
  in.reserve(target.size());
  in.push_back(bos);
  in.insert(in.end(), target.begin(), target.end() - 1);
  return in;
}

struct Sequence {
  std::vector<int> input;
  std::vector<int> target;
};

struct BatchLoss {
  double value = 0.0;
  Tensor3 grad;
};

BatchLoss objective_loss(Objective objective, const LogitsBatch& logits, const TargetBatch& targets,
                         const CoordSpec& spec, const LossConfig& loss) {
  BatchLoss out;
  switch (objective) {
    case Objective::CrossEntropy: {
      auto r = cross_entropy(logits, targets, true);
      out.value = r.loss;
      out.grad = std::move(*r.grad);
      break;
    }
    case Objective::GkCel: {
      auto r = gk_cel(logits, targets, spec, loss.kernel(), {loss.epsilon, true});
      out.value = r.loss;
      out.grad = std::move(*r.grad);
      break;
    }
    case Objective::SoftArgmax: {
      // Class, text and end tokens still need a categorical loss; the
      // regression term is added on coordinate positions only.
      auto r = cross_entropy(logits, targets, true);
      out.value = r.loss;
      out.grad = std::move(*r.grad);
      TargetBatch coords = targets;
      for (std::size_t i = 0; i < coords.mask.size(); ++i) {
        if (coords.mask[i] && !spec.contains(coords.labels[i])) coords.mask[i] = 0;
      }
      if (coords.count() > 0) {
        auto s = softargmax_loss(logits, coords, spec, loss.softargmax_temperature, loss.softargmax_weight, true);
        out.value += s.loss;
        auto& g = out.grad.values();
        const auto& sg = s.grad->values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += sg[i];
      }
      break;
    }
  }
  return out;
}

// Forward a group of sequences, apply the objective and backpropagate
// `weight * loss`. Returns the unweighted loss.
double run_group(const TinyDecoder& model, const std::vector<const ToyExample*>& scenes,
                 const std::vector<Sequence>& seqs, Objective objective, const CoordSpec& spec,
                 const LossConfig& loss, double weight, std::vector<double>& grad) {
  const std::size_t b = seqs.size();
  std::size_t len = 0;
  for (const auto& s : seqs) len = std::max(len, s.target.size());
  const auto V = static_cast<std::size_t>(model.config().vocab_size);
  LogitsBatch logits(b, len, V);
  TargetBatch targets(b, len);
  std::vector<ForwardStatePtr> states(b);
  std::vector<double> out;
  for (std::size_t i = 0; i < b; ++i) {
    states[i] = model.forward(scenes[i]->scene.grid, seqs[i].input, out);
    std::copy(out.begin(), out.end(), &logits(i, 0, 0));
    for (std::size_t j = 0; j < seqs[i].target.size(); ++j) targets.set(i, j, seqs[i].target[j]);
  }
  auto r = objective_loss(objective, logits, targets, spec, loss);
  std::vector<double> dl;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t n = seqs[i].target.size() * V;
    dl.assign(&r.grad(i, 0, 0), &r.grad(i, 0, 0) + n);
    for (auto& v : dl) v *= weight;
    model.backward(*states[i], dl, grad);
  }
  return r.value;
}

double offrange_loss(const TinyDecoder& model, const ToyDataset& data, Objective objective, const CoordSpec& spec,
                     const LossConfig& loss) {
  double total = 0.0;
  std::size_t count = 0;
  const auto V = static_cast<std::size_t>(model.config().vocab_size);
  for (const auto& ex : data.train) {
    for (int task = 0; task < 2; ++task) {
      const auto& target = task == 0 ? ex.noisy_detection : ex.text;
      const auto input = shifted_input(task == 0 ? ToyVocab::kBosDetect : ToyVocab::kBosText, target);
      LogitsBatch logits(1, target.size(), V);
      logits.values() = model.logits(ex.scene.grid, input);
      TargetBatch targets(1, target.size());
      for (std::size_t j = 0; j < target.size(); ++j) targets.set(0, j, target[j], !spec.contains(target[j]));
      if (targets.count() == 0) continue;
      LossOutput r;
      if (objective == Objective::GkCel) {
        r = gk_cel(logits, targets, spec, loss.kernel(), {loss.epsilon, false});
      } else {
        r = cross_entropy(logits, targets, false);
      }
      for (std::size_t j = 0; j < target.size(); ++j) {
        if (targets.active(0, j)) {
          total += r.position_loss[j];
          ++count;
        }
      }
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

double learning_rate_factor(const OptimizerConfig& opt, std::size_t step, std::size_t total) {
  const auto warm = static_cast<std::size_t>(opt.warmup_steps);
  if (step < warm) return static_cast<double>(step + 1) / static_cast<double>(warm + 1);
  if (!opt.cosine_decay || total <= warm) return 1.0;
  const double t = static_cast<double>(step - warm) / static_cast<double>(total - warm);
  return 0.5 * (1.0 + std::cos(M_PI * t));
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

std::string objective_name(Objective objective) {
  switch (objective) {
    case Objective::CrossEntropy: return "ce";
    case Objective::GkCel: return "gk-cel";
    case Objective::SoftArgmax: return "soft-argmax";
  }
  return "unknown";
}

Objective parse_objective(std::string_view name) {
  if (name == "ce") return Objective::CrossEntropy;
  if (name == "gk-cel") return Objective::GkCel;
  if (name == "soft-argmax") return Objective::SoftArgmax;
  throw ConfigError("unknown objective '" + std::string(name) + "' (expected ce, gk-cel or soft-argmax)");
}

void ToyDataConfig::validate() const {
  scene.validate();
  noise.validate();
  if (train_scenes < 1) throw ConfigError("train_scenes must be positive");
  if (test_scenes < 0) throw ConfigError("test_scenes must be nonnegative");
}

int ToyDataset::max_sequence_length() const {
  std::size_t n = 1;
  for (const auto* set : {&train, &test}) {
    for (const auto& ex : *set) n = std::max({n, ex.detection.size(), ex.text.size()});
  }
  return static_cast<int>(n);
}

ToyDataset make_toy_dataset(const ToyDataConfig& config) {
  config.validate();
  ToyDataset data;
  data.scene = config.scene;
  data.vocab = ToyVocab::for_scenes(config.scene);
  auto make = [&](std::uint64_t scene_seed, std::optional<std::uint64_t> noise_seed) {
    ToyExample ex;
    ex.scene = generate_scene(scene_seed, config.scene);
    ex.detection = detection_targets(ex.scene, data.vocab).tokens;
    ex.text = text_targets(ex.scene, data.vocab).tokens;
    ex.noisy_detection = noise_seed ? perturb_labels(ex.scene, config.noise, *noise_seed, data.vocab).labels
                                    : ex.detection;
    return ex;
  };
  for (int i = 0; i < config.train_scenes; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    data.train.push_back(make(Rng::derive(config.seed, mix(kSaltTrainScene, k)).next(),
                              Rng::derive(config.seed, mix(kSaltNoise, k)).next()));
  }
  for (int i = 0; i < config.test_scenes; ++i) {
    data.test.push_back(make(Rng::derive(config.seed, mix(kSaltTestScene, static_cast<std::uint64_t>(i))).next(),
                             std::nullopt));
  }
  return data;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be nonnegative");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be nonnegative");
}

std::vector<double> DecoderModel::logits(const ToyExample& example, std::span<const int> inputs) const {
  return decoder_.logits(example.scene.grid, inputs);
}

std::vector<double> OracleModel::logits(const ToyExample& example, std::span<const int> inputs) const {
  std::vector<double> out(inputs.size() * static_cast<std::size_t>(vocab_size_), 0.0);
  if (inputs.empty()) return out;
  const auto& target = inputs[0] == ToyVocab::kBosText ? example.text : example.detection;
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const int t = j < target.size() ? target[j] : ToyVocab::kEos;
    out[j * static_cast<std::size_t>(vocab_size_) + static_cast<std::size_t>(t)] = 10.0;
  }
  return out;
}

std::vector<double> RandomModel::logits(const ToyExample& example, std::span<const int> inputs) const {
  std::uint64_t h = seed_;
  for (auto c : example.scene.grid) h = mix(h, c);
  std::vector<double> out;
  out.reserve(inputs.size() * static_cast<std::size_t>(vocab_size_));
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    h = mix(h, static_cast<std::uint64_t>(inputs[j]) + 1);
    Rng rng(mix(h, j));
    for (int k = 0; k < vocab_size_; ++k) out.push_back(rng.normal());
  }
  return out;
}

std::vector<int> greedy_decode(const SequenceModel& model, const ToyExample& example, int bos, int max_len) {
  std::vector<int> inputs = {bos};
  std::vector<int> generated;
  const auto V = static_cast<std::size_t>(model.vocab_size());
  while (static_cast<int>(generated.size()) < max_len) {
    const auto z = model.logits(example, inputs);
    const double* last = z.data() + (inputs.size() - 1) * V;
    const int next = static_cast<int>(std::max_element(last, last + V) - last);
    generated.push_back(next);
    if (next == ToyVocab::kEos) break;
    inputs.push_back(next);
  }
  return generated;
}

EvalResult evaluate_toy(const SequenceModel& model, std::span<const ToyExample> examples, const ToyVocab& vocab,
                        int max_decode_len) {
  EvalResult r;
  r.scenes = examples.size();
  const auto V = static_cast<std::size_t>(model.vocab_size());
  const auto& spec = vocab.coords;
  const auto labels = vocab.label_map();
  double abs_err = 0.0;
  double decoded_err = 0.0;
  std::size_t text_hits = 0;
  std::vector<DetectionScore> per_scene;
  for (const auto& ex : examples) {
    const auto input = shifted_input(ToyVocab::kBosDetect, ex.detection);
    const auto z = model.logits(ex, input);
    for (std::size_t j = 0; j < ex.detection.size(); ++j) {
      const int t = ex.detection[j];
      if (!spec.contains(t)) continue;
      const double* row = z.data() + j * V;
      const auto best = std::max_element(row + spec.start, row + spec.end + 1) - row;
      abs_err += std::abs(static_cast<double>(best - t));
      ++r.coord_positions;
    }

    TokenSequence decoded{greedy_decode(model, ex, ToyVocab::kBosDetect, max_decode_len)};
    const auto parsed = parse_layout(decoded, spec, labels);
    r.parse_diagnostics += parsed.diagnostics.size();
    std::vector<ScoredDetection> preds;
    for (const auto& el : parsed.elements) preds.push_back({el, std::nullopt});
    const auto match = match_detections(preds, ex.scene.elements, 0.5);
    per_scene.push_back(score_matches(match, preds.size(), ex.scene.elements.size()));
    for (const auto& m : match.pairs) {
      const auto& a = preds[m.pred].element.box;
      const auto& b = ex.scene.elements[m.gt].box;
      for (auto [u, v] : {std::pair{a.x0, b.x0}, {a.y0, b.y0}, {a.x1, b.x1}, {a.y1, b.y1}}) {
        decoded_err += std::abs(quantize_coord(u, spec) - quantize_coord(v, spec));
      }
      ++r.matched_pairs;
    }

    const auto text = greedy_decode(model, ex, ToyVocab::kBosText, static_cast<int>(ex.text.size()) + 4);
    if (text == ex.text) ++text_hits;
  }
  r.detection = pool_scores(per_scene);
  if (r.coord_positions) r.coord_mae_bins = abs_err / static_cast<double>(r.coord_positions);
  if (r.matched_pairs) r.decoded_mae_bins = decoded_err / (4.0 * static_cast<double>(r.matched_pairs));
  if (r.scenes) r.text_exact_match = static_cast<double>(text_hits) / static_cast<double>(r.scenes);
  return r;
}

TinyDecoderConfig resolve_decoder_config(const ToyDataset& dataset, const TrainConfig& config) {
  TinyDecoderConfig dc = config.decoder;
  dc.vocab_size = dataset.vocab.vocab_size;
  dc.max_seq_len = std::max(dc.max_seq_len, dataset.max_sequence_length() + 4);
  dc.grid_height = dataset.scene.height;
  dc.grid_width = dataset.scene.width;
  dc.seed = Rng::derive(config.seed, kSaltInit).next();
  return dc;
}

TrainReport train(const ToyDataset& dataset, const TrainConfig& config, TinyDecoder* trained) {
  if (dataset.train.empty()) throw EmptyBatchError("training dataset is empty");
  config.optimizer.validate();
  const auto start = std::chrono::steady_clock::now();

  LossConfig loss = config.loss;
  loss.range_start = dataset.vocab.coords.start;
  loss.range_end = dataset.vocab.coords.end;
  const CoordSpec spec = loss.coord_spec();
  spec.validate(dataset.vocab.vocab_size);
  if (config.objective == Objective::GkCel) (void)loss.kernel();  // surface kernel config errors up front
  const double w_det = loss.weight("detection");
  const double w_text = loss.weight("text");

  TinyDecoder model(resolve_decoder_config(dataset, config));
  TrainReport report;
  report.objective = config.objective;
  report.seed = config.seed;
  report.epochs = config.optimizer.epochs;
  report.parameters = model.num_parameters();
  report.step0_offrange_loss = offrange_loss(model, dataset, config.objective, spec, loss);

  const auto& opt = config.optimizer;
  std::vector<double> grad(model.num_parameters());
  std::vector<double> velocity(model.num_parameters(), 0.0);
  Rng order_rng = Rng::derive(config.seed, kSaltOrder);
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t batches_per_epoch =
      (order.size() + static_cast<std::size_t>(opt.batch_size) - 1) / static_cast<std::size_t>(opt.batch_size);
  const std::size_t total_steps = batches_per_epoch * static_cast<std::size_t>(opt.epochs);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.uniform_int(0, static_cast<long>(i) - 1))]);
    }
    double sum = 0.0, sum_det = 0.0, sum_text = 0.0;
    std::size_t batches = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(opt.batch_size));
      std::vector<const ToyExample*> scenes;
      std::vector<Sequence> det, text;
      for (std::size_t k = b0; k < b1; ++k) {
        const auto& ex = dataset.train[order[k]];
        scenes.push_back(&ex);
        det.push_back({shifted_input(ToyVocab::kBosDetect, ex.noisy_detection), ex.noisy_detection});
        text.push_back({shifted_input(ToyVocab::kBosText, ex.text), ex.text});
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      double l_det = 0.0, l_text = 0.0;
      try {
        l_det = run_group(model, scenes, det, config.objective, spec, loss, w_det, grad);
        l_text = run_group(model, scenes, text, config.objective, spec, loss, w_text, grad);
      } catch (const DomainError& e) {
        // Targets are generated internally, so a domain failure here means overflow.
        throw DivergenceError(objective_name(config.objective) + " forward pass overflowed in epoch " +
                                  std::to_string(epoch) + " (" + e.what() + ")",
                              static_cast<long>(report.steps));
      }
      const double total = w_det * l_det + w_text * l_text;
      const bool finite_grad = std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
      if (!std::isfinite(total) || !finite_grad) {
        throw DivergenceError(objective_name(config.objective) + " loss or gradient became non-finite in epoch " +
                                  std::to_string(epoch),
                              static_cast<long>(report.steps));
      }
      if (opt.clip_norm > 0.0) {
        double sq = 0.0;
        for (double g : grad) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > opt.clip_norm) {
          for (double& g : grad) g *= opt.clip_norm / norm;
        }
      }
      const double lr = opt.learning_rate * learning_rate_factor(opt, report.steps, total_steps);
      auto& params = model.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = opt.momentum * velocity[i] + grad[i];
        params[i] -= lr * velocity[i];
      }
      ++report.steps;
      ++batches;
      sum += total;
      sum_det += l_det;
      sum_text += l_text;
    }
    const auto nb = static_cast<double>(batches);
    report.loss_curve.push_back(sum / nb);
    report.detection_loss_curve.push_back(sum_det / nb);
    report.text_loss_curve.push_back(sum_text / nb);
  }

  const int max_decode = 5 * dataset.scene.max_elements + 4;
  const DecoderModel wrapped(model);
  if (config.evaluate_train) report.train_eval = evaluate_toy(wrapped, dataset.train, dataset.vocab, max_decode);
  if (config.evaluate_test && !dataset.test.empty()) {
    report.test_eval = evaluate_toy(wrapped, dataset.test, dataset.vocab, max_decode);
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (trained) *trained = std::move(model);
  return report;
}

ExperimentConfig noisy_label_protocol() {
  ExperimentConfig c;
  c.data.scene.height = 16;
  c.data.scene.width = 16;
  c.data.noise = {2, 0.5};
  c.data.train_scenes = 128;
  c.data.test_scenes = 256;
  c.train.decoder.embed_dim = 32;
  c.train.decoder.num_layers = 2;
  c.train.decoder.num_heads = 4;
  c.train.optimizer.learning_rate = 0.1;
  c.train.optimizer.momentum = 0.9;
  c.train.optimizer.batch_size = 4;
  c.train.optimizer.epochs = 100;
  c.train.evaluate_train = false;
  return c;
}

ExperimentReport run_paired_experiment(const ExperimentConfig& config) {
  if (config.objectives.empty()) throw ConfigError("experiment needs at least one objective");
  if (config.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  ExperimentReport report;
  report.objectives = config.objectives;
  for (const auto seed : config.seeds) {
    ToyDataConfig dc = config.data;
    dc.seed = seed;
    const ToyDataset data = make_toy_dataset(dc);
    PairedRun run;
    run.seed = seed;
    for (const auto objective : config.objectives) {
      TrainConfig tc = config.train;
      tc.objective = objective;
      tc.seed = seed;
      run.reports.push_back(train(data, tc));
      if (run.reports.back().step0_offrange_loss != run.reports.front().step0_offrange_loss) {
        report.step0_identical = false;
      }
    }
    report.runs.push_back(std::move(run));
  }

  const auto find = [&](Objective o) -> std::optional<std::size_t> {
    const auto it = std::find(config.objectives.begin(), config.objectives.end(), o);
    if (it == config.objectives.end()) return std::nullopt;
    return static_cast<std::size_t>(it - config.objectives.begin());
  };
  const auto ce = find(Objective::CrossEntropy);
  const auto gk = find(Objective::GkCel);
  if (ce && gk && config.train.evaluate_test && config.data.test_scenes > 0) {
    int mae = 0, f1 = 0;
    for (const auto& run : report.runs) {
      const auto& a = *run.reports[*gk].test_eval;
      const auto& b = *run.reports[*ce].test_eval;
      if (a.coord_mae_bins <= b.coord_mae_bins) ++mae;
      if (a.detection.f1 >= b.detection.f1) ++f1;
    }
    report.gk_mae_not_worse = mae;
    report.gk_f1_not_worse = f1;
  }
  return report;
}

}  // namespace docparse::toy
