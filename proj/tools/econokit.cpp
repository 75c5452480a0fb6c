#include <iostream>
#include <string>
#include <vector>

#include "econokit/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return econokit::cli::dispatch(args, std::cout, std::cerr, econokit::cli::process_environment());
}
