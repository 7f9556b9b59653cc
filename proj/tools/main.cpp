#include "ncve/cli.hpp"

int main(int argc, char** argv) { return ncve::run_cli(argc, argv); }
