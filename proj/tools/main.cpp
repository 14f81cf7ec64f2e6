#include "cli.hpp"

int main(int argc, char **argv) { return srisck::cli::run_cli(argc, argv); }
