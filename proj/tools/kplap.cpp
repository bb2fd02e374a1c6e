#include <cstdio>
#include <exception>
#include <iostream>

#include "kplap/cli/args.hpp"
#include "kplap/cli/run.hpp"

int main(int argc, char** argv) {
  using namespace kplap::cli;
  try {
    ParsedArgs args = parse_args(argc, argv);
    if (args.early_exit) {
      std::cout << args.help_text;
      return *args.early_exit;
    }
    const RunOutcome out = run(args.config, args.p_given);
    for (const Check& c : out.checks)
      std::printf("%s %s value=%s tol=%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), fmt(c.value).c_str(),
                  fmt(c.tolerance).c_str());
    for (const auto& w : out.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    for (const auto& f : out.files) std::printf("wrote %s\n", f.c_str());
    return out.exit_code;
  } catch (const std::exception& e) {
    std::cerr << error_json(e) << '\n';
    return exit_code_for(e);
  }
}
