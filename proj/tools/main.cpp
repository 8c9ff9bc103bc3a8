#include "stochplan/bench.hpp"

int main(int argc, char** argv) { return stochplan::run_cli(argc, argv); }
