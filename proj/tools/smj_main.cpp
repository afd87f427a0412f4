#include "smj/cli/commands.hpp"

int main(int argc, char** argv) { return smj::cli::run_cli(argc, argv); }
