#include <iostream>

#include "betalab/cli.hpp"

int main(int argc, char** argv) { return betalab::run(argc, argv, std::cout, std::cerr); }
