#include "mpotrace/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
    mpotrace::cli::configure_logging();
    return mpotrace::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
