#include "drawdown/run.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return drawdown::cli_main(argc, argv, std::cout, std::cerr);
}
