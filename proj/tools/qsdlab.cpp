#include "qsdlab/cli.hpp"

int main(int argc, char** argv) { return qsdlab::cli::run_cli(argc, argv); }
