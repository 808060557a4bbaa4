#include <filesystem>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "common.hpp"
#include "docparse/errors.hpp"
#include "docparse/toy_train.hpp"
#include "svg_plot.hpp"

namespace docparse::cli {

namespace {

using namespace docparse::toy;

struct TrainArgs {
  ExperimentConfig exp = noisy_label_protocol();
  std::string output_dir;
  std::string loss_config;
  std::string objectives = "ce,gk-cel";
  std::string prefix = "lines";
  std::uint64_t seed = 0;
  int num_seeds = 5;
  int grid = 16;
  bool record_timing = false;
};

Json score_json(const DetectionScore& d) {
  return {{"precision", d.precision},
          {"recall", d.recall},
          {"f1", d.f1},
          {"true_positives", d.true_positives},
          {"predictions", d.predictions},
          {"ground_truths", d.ground_truths},
          {"precision_undefined", d.precision_undefined},
          {"recall_undefined", d.recall_undefined}};
}

Json eval_json(const EvalResult& e) {
  return {{"scenes", e.scenes},
          {"coord_positions", e.coord_positions},
          {"coord_mae_bins", e.coord_mae_bins},
          {"decoded_mae_bins", e.decoded_mae_bins},
          {"matched_pairs", e.matched_pairs},
          {"detection_iou_0_5", score_json(e.detection)},
          {"text_exact_match", e.text_exact_match},
          {"parse_diagnostics", e.parse_diagnostics}};
}

Json report_json(const TrainReport& r, bool timing) {
  Json j;
  j["objective"] = objective_name(r.objective);
  j["seed"] = r.seed;
  j["epochs"] = r.epochs;
  j["steps"] = r.steps;
  j["parameters"] = r.parameters;
  j["step0_offrange_loss"] = r.step0_offrange_loss;
  j["loss_curve"] = r.loss_curve;
  j["detection_loss_curve"] = r.detection_loss_curve;
  j["text_loss_curve"] = r.text_loss_curve;
  j["train_eval"] = r.train_eval ? eval_json(*r.train_eval) : Json();
  j["test_eval"] = r.test_eval ? eval_json(*r.test_eval) : Json();
  if (timing) j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j;
}

Json config_json(const TrainArgs& a) {
  const auto& d = a.exp.data;
  const auto& t = a.exp.train;
  Json objectives = Json::array();
  for (auto o : a.exp.objectives) objectives.push_back(objective_name(o));
  Json weights = Json::object();
  for (const auto& [task, w] : t.loss.task_weights) weights[task] = w;
  return {
      {"seeds", a.exp.seeds},
      {"objectives", objectives},
      {"data",
       {{"grid_height", d.scene.height},
        {"grid_width", d.scene.width},
        {"min_elements", d.scene.min_elements},
        {"max_elements", d.scene.max_elements},
        {"min_side", d.scene.min_side},
        {"max_side", d.scene.max_side},
        {"num_classes", d.scene.num_classes},
        {"train_scenes", d.train_scenes},
        {"test_scenes", d.test_scenes},
        {"noise_max_shift", d.noise.max_shift},
        {"noise_probability", d.noise.probability}}},
      {"decoder",
       {{"embed_dim", t.decoder.embed_dim},
        {"num_layers", t.decoder.num_layers},
        {"num_heads", t.decoder.num_heads},
        {"mlp_ratio", t.decoder.mlp_ratio},
        {"prefix", a.prefix},
        {"patch_size", t.decoder.patch_size},
        {"init_scale", t.decoder.init_scale}}},
      {"optimizer",
       {{"learning_rate", t.optimizer.learning_rate},
        {"momentum", t.optimizer.momentum},
        {"batch_size", t.optimizer.batch_size},
        {"epochs", t.optimizer.epochs},
        {"clip_norm", t.optimizer.clip_norm},
        {"cosine_decay", t.optimizer.cosine_decay},
        {"warmup_steps", t.optimizer.warmup_steps}}},
      {"loss",
       {{"kernel_size", t.loss.kernel_size},
        {"sigma", t.loss.sigma},
        {"normalized", t.loss.normalized},
        {"epsilon", t.loss.epsilon},
        {"softargmax_temperature", t.loss.softargmax_temperature},
        {"softargmax_weight", t.loss.softargmax_weight},
        {"task_weights", weights},
        {"loss_config", resolve_path(a.loss_config)}}},
      {"evaluate_train", t.evaluate_train},
      {"record_timing", a.record_timing}};
}

std::vector<Objective> parse_objectives(const std::string& list) {
  std::vector<Objective> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Objective o = parse_objective(item);
    if (std::find(out.begin(), out.end(), o) != out.end()) throw ConfigError("objective '" + item + "' listed twice");
    out.push_back(o);
  }
  if (out.empty()) throw ConfigError("no objectives given");
  return out;
}

const char* color_for(Objective o) {
  switch (o) {
    case Objective::CrossEntropy: return "#d62728";
    case Objective::GkCel: return "#1f77b4";
    case Objective::SoftArgmax: return "#2ca02c";
  }
  return "black";
}

}  // namespace

void add_train_toy(CLI::App& app, int& exit_code) {
  auto a = std::make_shared<TrainArgs>();
  auto& d = a->exp.data;
  auto& t = a->exp.train;
  auto* sub = app.add_subcommand("train-toy", "Train the toy decoder with each objective on identical seeds");
  sub->add_option("-o,--output-dir", a->output_dir, "Directory for train_report.json and loss_curves.svg")
      ->required();
  sub->add_option("--seed", a->seed, "First seed")->capture_default_str();
  sub->add_option("--num-seeds", a->num_seeds, "Number of consecutive paired seeds")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--objectives", a->objectives, "Comma list of ce, gk-cel, soft-argmax")->capture_default_str();
  sub->add_option("--epochs", t.optimizer.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--train-scenes", d.train_scenes, "Training scenes per seed")->capture_default_str();
  sub->add_option("--test-scenes", d.test_scenes, "Held-out clean scenes per seed")->capture_default_str();
  sub->add_option("--grid", a->grid, "Square scene size in cells")->capture_default_str();
  sub->add_option("--max-elements", d.scene.max_elements, "Rectangles per scene, upper bound")
      ->capture_default_str();
  sub->add_option("--noise-shift", d.noise.max_shift, "Label noise: largest bin shift")->capture_default_str();
  sub->add_option("--noise-prob", d.noise.probability, "Label noise: per-coordinate probability")
      ->capture_default_str();
  sub->add_option("--embed-dim", t.decoder.embed_dim, "Decoder width")->capture_default_str();
  sub->add_option("--layers", t.decoder.num_layers, "Decoder blocks")->capture_default_str();
  sub->add_option("--heads", t.decoder.num_heads, "Attention heads")->capture_default_str();
  sub->add_option("--prefix", a->prefix, "Image embedding: lines or patches")->capture_default_str()
      ->check(CLI::IsMember({"lines", "patches"}));
  sub->add_option("--patch-size", t.decoder.patch_size, "Patch side for --prefix patches")->capture_default_str();
  sub->add_option("--lr", t.optimizer.learning_rate, "Peak learning rate")->capture_default_str();
  sub->add_option("--momentum", t.optimizer.momentum, "SGD momentum")->capture_default_str();
  sub->add_option("--batch-size", t.optimizer.batch_size, "Scenes per step")->capture_default_str();
  sub->add_option("--clip-norm", t.optimizer.clip_norm, "Global gradient norm clip, 0 disables")
      ->capture_default_str();
  sub->add_option("--warmup-steps", t.optimizer.warmup_steps, "Linear warmup steps")->capture_default_str();
  sub->add_flag("!--no-cosine", t.optimizer.cosine_decay, "Keep the learning rate constant after warmup");
  sub->add_option("--loss-config", a->loss_config, "key = value loss configuration file")
      ->check(CLI::ExistingFile);
  sub->add_flag("--eval-train", t.evaluate_train, "Also evaluate on the training scenes (clean labels)");
  sub->add_flag("--record-timing", a->record_timing, "Include wall-clock seconds (breaks byte-identical output)");

  sub->callback([a, &exit_code] {
    auto& exp = a->exp;
    exp.objectives = parse_objectives(a->objectives);
    exp.seeds.clear();
    for (int i = 0; i < a->num_seeds; ++i) exp.seeds.push_back(a->seed + static_cast<std::uint64_t>(i));
    exp.data.scene.height = exp.data.scene.width = a->grid;
    exp.data.scene.max_side = std::min(exp.data.scene.max_side, a->grid);
    exp.train.decoder.prefix = a->prefix == "lines" ? PrefixKind::Lines : PrefixKind::Patches;
    if (!a->loss_config.empty()) exp.train.loss = load_loss_config(a->loss_config);
    exp.data.validate();
    exp.train.optimizer.validate();

    const ExperimentReport rep = run_paired_experiment(exp);

    std::filesystem::create_directories(a->output_dir);
    Json j;
    j["command"] = "train-toy";
    j["seed"] = a->seed;
    j["config"] = config_json(*a);
    Json runs = Json::array();
    for (const auto& run : rep.runs) {
      Json reports = Json::array();
      for (const auto& r : run.reports) reports.push_back(report_json(r, a->record_timing));
      runs.push_back({{"seed", run.seed}, {"reports", reports}});
    }
    j["runs"] = runs;
    Json cmp;
    cmp["pairs"] = rep.runs.size();
    cmp["step0_offrange_identical"] = rep.step0_identical;
    cmp["gk_mae_not_worse"] = rep.gk_mae_not_worse ? Json(*rep.gk_mae_not_worse) : Json();
    cmp["gk_f1_not_worse"] = rep.gk_f1_not_worse ? Json(*rep.gk_f1_not_worse) : Json();
    j["comparison"] = cmp;
    const auto dir = std::filesystem::path(a->output_dir);
    write_json((dir / "train_report.json").string(), j);

    std::vector<PlotSeries> series;
    for (std::size_t k = 0; k < rep.objectives.size(); ++k) {
      bool first = true;
      for (const auto& run : rep.runs) {
        series.push_back({objective_name(rep.objectives[k]), color_for(rep.objectives[k]),
                          run.reports[k].loss_curve, 0.8, first});
        first = false;
      }
    }
    Output svg((dir / "loss_curves.svg").string());
    svg.stream() << line_plot_svg("Training loss per objective (one line per seed)", "epoch",
                                  "mean batch loss", series);
    exit_code = kExitOk;
  });
}

}  // namespace docparse::cli
