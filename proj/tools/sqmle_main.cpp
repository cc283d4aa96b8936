#include <iostream>

#include "sqmle/cli.hpp"

int main(int argc, char** argv) { return sqmle::run_cli(argc, argv, std::cout, std::cerr); }
