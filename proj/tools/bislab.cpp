#include "bislab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return bislab::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
