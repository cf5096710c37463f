#include <iostream>

#include "occupant/cli.hpp"

int main(int argc, char** argv) { return occupant::cli::run(argc, argv, std::cout, std::cerr); }
