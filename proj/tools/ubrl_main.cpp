#include "ubrl/cli.hpp"

int main(int argc, char** argv) { return ubrl::cli::run(argc, argv); }
