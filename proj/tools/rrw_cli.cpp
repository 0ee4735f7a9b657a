#include "rrw/cli.hpp"

int main(int argc, char** argv) { return rrw::run_cli(argc, argv); }
