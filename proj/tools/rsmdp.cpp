#include "rsmdp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return rsmdp::cli::run(argc, argv, std::cout, std::cerr); }
