#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nuisblue/cli.hpp"

namespace {

// NB_SEED supplies the seed when no flag or config key names one.
std::optional<std::uint64_t> env_seed(std::string& error) {
  const char* raw = std::getenv("NB_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (*end != '\0' || raw[0] == '-') {
    error = "NB_SEED must be an unsigned integer, got '" + std::string(raw) +
            "'";
    return std::nullopt;
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear estimation with nuisance parameters"};
  app.require_subcommand(1);

  auto* illustrate = app.add_subcommand(
      "illustrate", "print the worked three-observation example");

  nuisblue::VerifyOptions verify_options;
  auto* verify = app.add_subcommand(
      "verify", "check the estimator identities on random instances");
  verify->add_option("--trials", verify_options.trials,
                     "number of random instances");
  verify->add_option("--seed", verify_options.seed,
                     "seed for the random instances");
  verify->add_option("--inject-fault", verify_options.inject_fault,
                     "negative control; 'skip-whitening' must fail");

  nuisblue::LocalizeOptions localize_options;
  auto* localize = app.add_subcommand(
      "localize", "run a localization campaign from a config file");
  localize
      ->add_option("--config", localize_options.config_path,
                   "campaign config file")
      ->required();
  localize->add_option("--out", localize_options.out_dir,
                       "output directory (default '.')");

  CLI11_PARSE(app, argc, argv);

  std::string env_error;
  const auto seed = env_seed(env_error);
  if (!env_error.empty()) {
    std::cerr << "error: " << env_error << '\n';
    return 2;
  }

  if (illustrate->parsed()) {
    return nuisblue::cmd_illustrate(std::cout);
  }
  if (verify->parsed()) {
    if (verify->count("--seed") == 0 && seed) verify_options.seed = *seed;
    return nuisblue::cmd_verify(verify_options, std::cout);
  }
  localize_options.seed_override = seed;
  return nuisblue::cmd_localize(localize_options, std::cout, std::cerr);
}
