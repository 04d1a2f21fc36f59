#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparqlgen {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;  // bad arguments, config or input files
inline constexpr int kExitAbort = 2;  // runtime failure, e.g. endpoint down

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace sparqlgen
