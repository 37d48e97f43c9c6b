#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace r2net::cli {

// args excludes the program name. Data goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace r2net::cli
