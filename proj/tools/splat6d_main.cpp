#include <iostream>

#include "splat6d/cli.hpp"

int main(int argc, char** argv) { return splat6d::run_cli(argc, argv, std::cout, std::cerr); }
