#include <iostream>

#include "dmdkit/cli.hpp"

int main(int argc, char** argv) { return dmdkit::cli::run(argc, argv, std::cout, std::cerr); }
