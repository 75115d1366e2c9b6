#include "bwf/cli.hpp"

int main(int argc, char** argv) { return bwf::cli::run_command(argc, argv); }
