#include <string>

#include "CLI11.hpp"
#include "skim/commands.hpp"

namespace {

void attach_common(CLI::App* cmd, skim::CliOptions& options, bool& seed_seen) {
  cmd->add_option("--config", options.config_path, "JSON config file");
  cmd->add_option("--seed", options.seed, "overrides the config seed")
      ->each([&seed_seen](const std::string&) { seed_seen = true; });
  cmd->add_option("--out", options.out_dir, "output directory");
  cmd->add_flag("--force", options.force, "reuse an existing output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skim-attention models over document layout"};
  app.require_subcommand(1);

  skim::CliOptions options;
  bool seed_seen = false;
  std::string chosen;
  for (const char* name :
       {"gen-data", "pretrain", "finetune", "eval-ppl", "eval-la", "mask", "attmap", "bench"}) {
    CLI::App* cmd = app.add_subcommand(name);
    attach_common(cmd, options, seed_seen);
    cmd->callback([&chosen, name]() { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  options.seed_set = seed_seen;
  return skim::run_command(chosen, options);
}
