#include <iostream>

#include "lpball/cli.hpp"

int main(int argc, char** argv) { return lpball::cli::run(argc, argv, std::cout, std::cerr); }
