#include "mjp/acceptance.hpp"
#include "mjp/defaults.hpp"

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "acceptance-out";
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : mjp::defaults::seed;
  const mjp::AcceptanceRun run = mjp::run_acceptance(out, seed, std::cout);
  return run.all_passed() ? 0 : 1;
}
