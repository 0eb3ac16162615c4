#include "gocre/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return gocre::cli_dispatch(argc, argv, std::cout, std::cerr);
}
