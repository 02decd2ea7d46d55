#include "mondrian/harness/cli.hpp"

int main(int argc, char** argv) {
  return mondrian::harness::run_cli(argc, argv);
}
