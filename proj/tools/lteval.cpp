#include <iostream>

#include "lteval/cli.hpp"

int main(int argc, char** argv) { return lteval::cli::run(argc, argv, std::cout, std::cerr); }
