#include <iostream>

#include "phylomarkov/cli.hpp"

int main(int argc, char** argv) { return phylomarkov::cli::run(argc, argv, std::cout, std::cerr); }
