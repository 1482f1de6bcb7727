#include "finpos/cli.hpp"

int main(int argc, char** argv) { return finpos::bt::run_cli(argc, argv); }
