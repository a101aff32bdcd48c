#include "quasilab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return quasilab::cli::main_entry(argc, argv, std::cout, std::cerr); }
