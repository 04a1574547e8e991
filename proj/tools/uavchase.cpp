#include <iostream>

#include "uavchase/cli.hpp"

int main(int argc, char** argv) { return uavchase::run_cli(argc, argv, std::cout, std::cerr); }
