#include "instret/cli.hpp"

int main(int argc, char** argv) { return instret::cli_main(argc, argv); }
