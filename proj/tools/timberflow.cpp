#include <iostream>

#include "timberflow/cli.hpp"

int main(int argc, char** argv) { return timberflow::cli_main(argc, argv, std::cout, std::cerr); }
