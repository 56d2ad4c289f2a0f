#include <cstdlib>
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  using namespace sparse_dfe::cli;
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args.front() == "--help" || args.front() == "-h") {
    std::cout << "usage: sparse_dfe <sweep|trace|theorem1|preset FIG|selftest> [flags]\n"
                 "flags: --block-len --constellation --spreading --equalizer --dfe --error-est\n"
                 "       --snr-db --trials --min-errors --seed --out --strict --threads\n"
                 "       --solver-max-iters --solver-tol --l1-bound-scale --threshold-norm\n"
                 "       --iterations\n"
                 "presets: fig6 fig7 fig8 fig9 fig10 fig11 fig12\n";
    return args.empty() ? 2 : 0;
  }
  Options opts;
  try {
    const char* env = std::getenv("SPARSE_DFE_THREADS");
    opts = parse_args(args, env ? std::optional<std::string>(env) : std::nullopt);
  } catch (const CliError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }
  return run(opts, std::cout, std::cerr);
}
