#include "xadapt/cli.hpp"

int main(int argc, char **argv) { return xadapt::run_cli(argc, argv); }
