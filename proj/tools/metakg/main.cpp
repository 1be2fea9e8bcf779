#include <iostream>
#include <string>
#include <vector>

#include "metakg/cli/app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return metakg::cli::run(args, std::cout, std::cerr);
}
