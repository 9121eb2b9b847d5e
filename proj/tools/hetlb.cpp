#include <iostream>

#include "hetlb/cli.hpp"

int main(int argc, char** argv) { return hetlb::cli::run(argc, argv, std::cout, std::cerr); }
