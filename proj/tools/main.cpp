#include <iostream>
#include <string>
#include <vector>

#include "affvec_cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return affvec::cli::run(args, std::cout, std::cerr);
}
