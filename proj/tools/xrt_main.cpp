#include <iostream>

#include "xrt/cli.hpp"

int main(int argc, char** argv) {
  return xrt::dispatch(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
