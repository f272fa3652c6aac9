#include "zqoc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace zqoc;

cli::Overrides overrides(const std::optional<int>& steps, const std::optional<double>& tol,
                         bool all_roots) {
  cli::Overrides o;
  o.steps = steps;
  o.tol = tol;
  o.all_roots = all_roots;
  return o;
}

std::vector<double> parse_components(const std::string& text) {
  std::vector<double> x;
  for (const auto& part : io::split(text, ',')) x.push_back(io::parse_double(part));
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-optimal gate synthesis on SU(n)"};
  app.require_subcommand(1);

  std::string config, out, param, range, input, xarg;
  std::optional<int> steps;
  std::optional<double> tol;
  bool all_roots = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "problem config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--steps", steps, "propagation or integration steps")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "verification or geodesic-vector tolerance")
        ->check(CLI::PositiveNumber);
  };

  auto* syn = app.add_subcommand("synthesize", "optimal time, control schedule and report");
  add_common(syn);
  syn->add_option("--out", out, "output prefix")->required();
  syn->add_flag("--all-roots", all_roots, "report every root up to t_max");

  auto* swp = app.add_subcommand("sweep", "time-dependent vs constant-control optimal times");
  add_common(swp);
  swp->add_option("--param", param, "b (single spin) or J (xxx chain)")->required();
  swp->add_option("--range", range, "lo:hi:step")->required();
  swp->add_option("--out", out, "output CSV")->required();
  swp->add_flag("--all-roots", all_roots, "scan for every root");

  auto* ver = app.add_subcommand("verify", "propagate a schedule CSV and check the endpoint");
  add_common(ver);
  ver->add_option("schedule", input, "schedule CSV")->required()->check(CLI::ExistingFile);

  auto* trv = app.add_subcommand("traverse", "traversal time of a velocity curve CSV");
  add_common(trv);
  trv->add_option("curve", input, "curve CSV")->required()->check(CLI::ExistingFile);

  auto* epc = app.add_subcommand("ep", "Euler-Poincare integration from the config's ep section");
  add_common(epc);
  epc->add_option("--out", out, "output prefix")->required();

  auto* geo = app.add_subcommand("geovec", "geodesic-vector check");
  add_common(geo);
  geo->add_option("--x", xarg, "comma-separated components of X in the config basis")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::invalid_config;
  }

  const cli::Overrides o = overrides(steps, tol, all_roots);
  return cli::guarded(
      [&]() -> cli::Outcome {
        const io::ProblemConfig cfg = io::load_config(config);
        if (*syn) return cli::synthesize(cfg, out, o);
        if (*swp) return cli::sweep(cfg, param, range, out, o);
        if (*ver) return cli::verify(cfg, input, o);
        if (*trv) return cli::traverse(cfg, input);
        if (*epc) return cli::ep(cfg, out, o);
        return cli::geovec(cfg, parse_components(xarg), o);
      },
      std::cout, std::cerr);
}
