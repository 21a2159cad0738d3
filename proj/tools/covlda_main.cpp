#include "covlda/cli.hpp"

int main(int argc, char** argv) { return covlda::cli::cli_main(argc, argv); }
