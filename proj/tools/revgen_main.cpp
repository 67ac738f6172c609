#include <iostream>

#include "revgen/cli.hpp"

int main(int argc, char** argv) { return revgen::cli::run(argc, argv, std::cout, std::cerr); }
