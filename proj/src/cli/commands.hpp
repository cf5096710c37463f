#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "occupant/cli.hpp"

namespace occupant::cli {

/// Per-invocation options that are not part of the persisted run config.
struct CommandArgs {
  bool overwrite = false;
  bool allow_stale = false;
  std::size_t row = 0;
  fs::path input;
  std::vector<std::string> annotations;
};

int cmd_fetch(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err);
int cmd_prepare(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err);
int cmd_correlations(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err);
int cmd_persona(const RunConfig& cfg, const CommandArgs& args, std::ostream& out, std::ostream& err);

}  // namespace occupant::cli
