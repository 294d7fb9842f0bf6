#include "dapes/cli.hpp"

#include <iostream>

int
main(int argc, char** argv)
{
  return dapes::cli::main(argc, argv, std::cout, std::cerr);
}
