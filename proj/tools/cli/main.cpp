#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return nearq::cli::run(argc, argv, std::cerr); }
