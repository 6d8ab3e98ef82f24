#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "nuisblue/harness.hpp"

namespace nuisblue {

// Default seed used when neither a flag, a config key, nor NB_SEED names one.
inline constexpr std::uint64_t kDefaultSeed = 20170107;

struct VerifyOptions {
  int trials = 1000;
  std::uint64_t seed = kDefaultSeed;
  // Negative-control hook: "skip-whitening" makes the reference-invariance
  // suite run on the raw differenced data, which must make it fail.
  std::string inject_fault;
};

struct LocalizeOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;  // NB_SEED, when set
};

// A campaign parsed from a config file, named for its output files.
struct LocalizeJob {
  std::string name = "campaign";
  CampaignConfig config;
  bool seed_was_set = false;  // config named an explicit seed
};

// Line-based config with [scene] and [campaign] sections; unknown keys and
// sections are rejected with the offending line number.
LocalizeJob parse_campaign_config(const std::string& text);
LocalizeJob load_campaign_config(const std::string& path);

// Random instances used by the verification suites and the tests.
LinearNuisanceModel verify_random_model(Rng& rng);
LocScene verify_random_scene(Rng& rng);

// Worked three-observation example: prints every intermediate object and
// checks them against the known closed-form values.  Returns 0 when all
// checks hold, 1 otherwise.
int cmd_illustrate(std::ostream& out);

// Randomized identity suites, one PASS/FAIL line each.  Returns the number
// of failed suites.
int cmd_verify(const VerifyOptions& options, std::ostream& out);

// Runs the configured campaign and writes CSV plus one SVG per model into
// the output directory.  Returns 0 on success, 2 on config errors.
int cmd_localize(const LocalizeOptions& options, std::ostream& out,
                 std::ostream& err);

}  // namespace nuisblue
