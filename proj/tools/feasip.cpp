#include "feasip/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return feasip::run_cli(argc, argv, std::cout, std::cerr);
}
