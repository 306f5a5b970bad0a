#include <iostream>

#include "dualfuse/cli.hpp"

int main(int argc, char** argv) { return dualfuse::cli::run(argc, argv, std::cout, std::cerr); }
