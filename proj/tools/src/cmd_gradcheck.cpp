#include <iostream>

#include "cli.hpp"
#include "common.hpp"
#include "docparse/gradcheck.hpp"

namespace docparse::cli {

namespace {

struct GradcheckArgs {
  GradcheckOptions options;
  std::string loss_config;
  std::string output = "-";
  int kernel_size = 5;
  double sigma = 1.0;
  bool unnormalized = false;
};

}  // namespace

void add_gradcheck(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<GradcheckArgs>();
  auto* sub = app.add_subcommand("gradcheck", "Compare analytic loss gradients with central finite differences");
  sub->add_option("--instances", args->options.instances, "Random instances per loss")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", args->options.seed, "Seed for the random instances")->capture_default_str();
  sub->add_option("--step", args->options.step, "Finite-difference step")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--tolerance", args->options.tolerance, "Maximum allowed relative error")->capture_default_str();
  sub->add_option("--loss-config", args->loss_config, "key = value loss configuration file")
      ->check(CLI::ExistingFile);
  auto* ks = sub->add_option("--kernel-size", args->kernel_size, "Gaussian kernel size (odd, >= 3)");
  auto* sg = sub->add_option("--sigma", args->sigma, "Gaussian kernel standard deviation");
  auto* un = sub->add_flag("--unnormalized", args->unnormalized, "Use the raw kernel (center tap 1)");
  sub->add_option("-o,--output", args->output, "Report path, - for stdout")->capture_default_str();
  sub->add_flag("--inject-sign-flip", args->options.inject_sign_flip, "Negate analytic gradients")->group("");

  sub->callback([args, ks, sg, un, &exit_code] {
    auto& opt = args->options;
    if (!args->loss_config.empty()) opt.loss = load_loss_config(args->loss_config);
    if (ks->count()) opt.loss.kernel_size = args->kernel_size;
    if (sg->count()) opt.loss.sigma = args->sigma;
    if (un->count()) opt.loss.normalized = false;
    (void)opt.loss.kernel();

    const GradcheckReport report = run_gradcheck(opt);
    Json j;
    j["command"] = "gradcheck";
    j["seed"] = opt.seed;
    j["config"] = {{"instances", opt.instances},
                   {"step", opt.step},
                   {"tolerance", opt.tolerance},
                   {"kernel_size", opt.loss.kernel_size},
                   {"sigma", opt.loss.sigma},
                   {"normalized", opt.loss.normalized},
                   {"epsilon", opt.loss.epsilon},
                   {"softargmax_temperature", opt.loss.softargmax_temperature},
                   {"softargmax_weight", opt.loss.softargmax_weight},
                   {"loss_config", resolve_path(args->loss_config)},
                   {"inject_sign_flip", opt.inject_sign_flip},
                   {"relative_error", "max|analytic - numeric| / max(max|analytic|, max|numeric|)"}};
    Json cases = Json::array();
    for (const auto& c : report.cases) {
      cases.push_back({{"name", c.name},
                       {"instances", c.instances},
                       {"max_rel_error", c.max_rel_error},
                       {"mean_rel_error", c.mean_rel_error},
                       {"worst_instance", c.worst_instance},
                       {"passed", c.passed}});
    }
    j["cases"] = cases;
    j["passed"] = report.passed;
    write_json(args->output, j);
    if (!report.passed) {
      for (const auto& c : report.cases) {
        if (!c.passed) {
          std::cerr << "gradcheck: " << c.name << " max relative error " << c.max_rel_error << " >= "
                    << opt.tolerance << " (instance " << c.worst_instance << ")\n";
        }
      }
    }
    exit_code = report.passed ? kExitOk : kExitCheckFailed;
  });
}

}  // namespace docparse::cli
