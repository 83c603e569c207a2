#pragma once

#include <cstdint>
#include <string>

namespace skim {

// Shared command-line surface: optional JSON config, output directory,
// seed override, and permission to reuse an existing output directory.
struct CliOptions {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
};

// Dispatches one subcommand. Returns 0 on success, 1 on validation
// errors (bad flags, bad config, refused output directory), 2 on runtime
// failures. Never throws.
int run_command(const std::string& name, const CliOptions& options);

}  // namespace skim
