#include <iostream>

#include "lagvar/commands.hpp"

int main(int argc, char** argv) {
    return lagvar::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
