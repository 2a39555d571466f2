#include "sift/cli.h"

#include <iostream>

int main(int argc, char** argv)
{
    return sift::cli::run(argc, argv, std::cout, std::cerr);
}
