#pragma once

// Command-line front end: simulate -> fit -> predict -> evaluate pipelines
// plus canned experiments. run() is the whole program; the binary's main()
// forwards to it, and tests call it in-process.

#include <string>
#include <vector>

namespace gpred::cli {

int run(int argc, const char* const* argv);

// Convenience overload: args without the program name.
int run(const std::vector<std::string>& args);

}  // namespace gpred::cli
