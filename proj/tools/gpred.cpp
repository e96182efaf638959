#include "gpred/cli.hpp"

int main(int argc, char** argv) { return gpred::cli::run(argc, argv); }
