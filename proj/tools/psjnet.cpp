#include <iostream>

#include "psjnet/cli/dispatch.hpp"

int main(int argc, char** argv) {
  return psjnet::cli::dispatch(argc, argv, std::cout, std::cerr);
}
