#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hybridfuse::cli::run(argc, argv, std::cout, std::cerr); }
