#pragma once

#include <string>
#include <vector>

#include "nal/config.hpp"

namespace nal {

struct CommandOutcome {
    int exit_code = 0;
    std::string message;
    std::vector<std::string> files;  // written, relative to the output directory
};

// check, critical, bi, sweep, reduce, compare. Artifacts go to cfg.out_dir only; on failure an
// ERROR marker with the message and exit code is written next to whatever was flushed.
CommandOutcome run_command(const std::string& command, const RunConfig& cfg);

const std::vector<std::string>& command_names();

}  // namespace nal
