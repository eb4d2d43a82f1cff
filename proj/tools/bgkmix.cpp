#include "bgk/cli_app.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return bgk::run_cli(argc, argv, std::cout, std::cerr);
}
