#include <iostream>

#include "potflow/cli.hpp"

int main(int argc, char** argv) { return potflow::cli::main(argc, argv, std::cout, std::cerr); }
