#include <iostream>

#include "dsfraud/cli.hpp"

int main(int argc, char** argv) { return dsfraud::cli::run(argc, argv, std::cout, std::cerr); }
