#include <string>
#include <vector>

#include "aniso/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return aniso::cli::run(args);
}
