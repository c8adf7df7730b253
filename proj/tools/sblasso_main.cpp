#include "sblasso/cli.hpp"

int main(int argc, char** argv) {
  return sblasso::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
