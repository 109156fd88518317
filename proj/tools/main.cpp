#include "visprompt/cli.hpp"

int main(int argc, char** argv) { return visprompt::cli_main(argc, argv); }
