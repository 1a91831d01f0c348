#include <iostream>

#include "exwb/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return exwb::run_cli(std::move(args), std::cout, std::cerr);
}
