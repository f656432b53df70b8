#include <iostream>

#include "popnet/cli.hpp"

int main(int argc, char** argv) { return popnet::run_cli(argc, argv, std::cout, std::cerr); }
