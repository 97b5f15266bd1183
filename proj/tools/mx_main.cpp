#include <iostream>
#include <string>
#include <vector>

#include "mx/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mx::run_cli(args, std::cout);
}
