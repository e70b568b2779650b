#include <iostream>

#include "aipw/cli.hpp"

int main(int argc, char** argv) { return aipw::cli::run(argc, argv, std::cout, std::cerr); }
