#include <iostream>

#include "hebert/cli/cli.hpp"

int main(int argc, char** argv) { return hebert::cli::run({argv, argv + argc}, std::cout, std::cerr); }
