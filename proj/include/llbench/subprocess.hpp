#pragma once

#include <map>
#include <string>
#include <vector>

namespace llb {

struct CommandResult {
    int exit_code = 0;
    std::string output;  // stdout and stderr interleaved
};

// Executes argv directly (no shell); captures combined output. Throws
// ProcessError when the process cannot be spawned or is killed by a
// signal; a nonzero exit status is returned, not thrown.
CommandResult run_command(const std::vector<std::string>& argv);

// Splits a command template on whitespace and substitutes {name}
// placeholders literally inside each token. Tokens still containing an
// unresolved placeholder listed in optional_placeholders are dropped
// (e.g. "--qpif-frame={qpif_frame}" when no switch frame is used);
// any other unresolved placeholder is an error.
std::vector<std::string> expand_command_template(
    const std::string& command_template, const std::map<std::string, std::string>& values,
    const std::vector<std::string>& optional_placeholders = {});

}  // namespace llb
