#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flowood::cli {

// Runs one flowood invocation. `args` excludes the program name. Returns the
// process exit status; failures print exactly one "error: ..." line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flowood::cli
