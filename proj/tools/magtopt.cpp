#include "magtopt/cli.hpp"

int main(int argc, char** argv) { return magtopt::cli::run_cli(argc, argv); }
