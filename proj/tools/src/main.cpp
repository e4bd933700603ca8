#include <iostream>

#include "cellgep_cli/cli.hpp"

int main(int argc, char** argv)
{
    return cellgep::cli::run(argc, argv, std::cout, std::cerr);
}
