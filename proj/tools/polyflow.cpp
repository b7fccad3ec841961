#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "polyflow/polyflow.hpp"

namespace {

void print_examples(std::ostream& os) {
  for (const polyflow::ExampleInfo& e : polyflow::example_catalog()) {
    os << e.name << "\n  " << e.description << "\n";
    for (const polyflow::ParamInfo& p : e.params)
      os << "  - " << p.name << " (default " << p.default_value << "): " << p.description << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polyflow: k-harmonic maps into space forms"};
  app.require_subcommand(1);

  std::string run_path;
  auto* run = app.add_subcommand("run", "run the action named in a JSON config");
  run->add_option("config", run_path, "experiment config (JSON)")->required();

  std::string audit_path;
  auto* audit = app.add_subcommand("audit", "audit the initial map of a JSON config");
  audit->add_option("config", audit_path, "experiment config (JSON)")->required();

  app.add_subcommand("examples", "list built-in maps and their parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*run) return polyflow::run_file(run_path, std::cerr);
  if (*audit) return polyflow::run_file(audit_path, std::cerr, polyflow::Action::Audit);
  print_examples(std::cout);
  return 0;
}
