#include "reprodiff/cli.hpp"

int main(int argc, char** argv) { return reprodiff::cli_main(argc, argv); }
