#include <iostream>

#include "ivqr/cli/app.hpp"

int main(int argc, char** argv) { return ivqr::cli::run(argc, argv, std::cout, std::cerr); }
