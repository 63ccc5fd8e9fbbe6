#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rsvol::cli {

/// Exit codes: 0 success, 2 usage or validation error, 3 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace rsvol::cli
