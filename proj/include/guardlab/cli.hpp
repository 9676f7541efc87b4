#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage, 2 data, 3 service.

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "guardlab/core.hpp"
#include "guardlab/scoring_client.hpp"

namespace guardlab {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitService = 3 };

int exit_code_for(ErrorKind kind) noexcept;

struct CliEnv {
  /// Overrides transport construction for `score` and `judge` (tests).
  std::function<std::unique_ptr<Transport>(const ServiceConfig&)> transport_factory;
};

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliEnv& env = {});

}  // namespace guardlab
