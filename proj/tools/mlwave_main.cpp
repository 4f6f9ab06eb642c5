#include <iostream>

#include "mlwave/cli.hpp"

int main(int argc, char** argv) { return mlwave::dispatch(argc, argv, std::cout, std::cerr); }
