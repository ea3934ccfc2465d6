#include <iostream>

#include "afil/harness/commands.hpp"

int main(int argc, char** argv) { return afil::harness::run_cli(argc, argv, std::cout, std::cerr); }
