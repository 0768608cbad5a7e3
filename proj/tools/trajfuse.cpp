#include <iostream>
#include <string>
#include <vector>

#include "trajfuse_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return trajfuse::cli::run(args, std::cout, std::cerr);
}
