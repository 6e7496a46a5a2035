#include "cfair/cli.hpp"

int main(int argc, char **argv) { return cfair::cli::run(argc, argv); }
