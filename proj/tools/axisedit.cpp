// axisedit: batch front end for axis discovery, distribution fitting and
// edit-intensity optimization.

#include <CLI11.hpp>

#include <iostream>

#include "axisedit/error.hpp"
#include "commands.hpp"

namespace cli = axisedit::cli;

int main(int argc, char** argv) {
  CLI::App app{"Attribute-axis editing in generative latent spaces"};
  app.require_subcommand(1);

  cli::GenMockOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-mock", "Sample labeled W latents from a mock world");
  gen_cmd->add_option("--backend", gen.backend, "Mock configuration (JSON)")->required();
  gen_cmd->add_option("--n", gen.n, "Number of latents")->required()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed");
  gen_cmd->add_option("--out", gen.out, "Dataset prefix")->required();

  cli::FitAxisOptions fit;
  auto* fit_cmd = app.add_subcommand("fit-axis", "Train the linear separator and extract the attribute axis");
  fit_cmd->add_option("--data", fit.data, "Labeled dataset prefix")->required();
  fit_cmd->add_option("--out", fit.out, "Axis file (.json)")->required();
  fit_cmd->add_option("--lambda", fit.lambda, "L2 regularization")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--epochs", fit.epochs, "Training epochs")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--batch", fit.batch, "Examples per step (0 = full set)")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--seed", fit.seed, "Shuffle seed");

  cli::FitDistOptions dist;
  auto* dist_cmd = app.add_subcommand("fit-dist", "Fit per-class score distributions on the axis");
  dist_cmd->add_option("--data", dist.data, "Labeled dataset prefix")->required();
  dist_cmd->add_option("--axis", dist.axis, "Axis file")->required();
  dist_cmd->add_option("--dist-male", dist.dist_male, "Output male distribution")->required();
  dist_cmd->add_option("--dist-female", dist.dist_female, "Output female distribution")->required();
  dist_cmd->add_option("--hist", dist.hist, "Optional histogram CSV");
  dist_cmd->add_option("--bins", dist.bins, "Histogram bins")->check(CLI::PositiveNumber);

  cli::FeasibleOptions feas;
  auto* feas_cmd = app.add_subcommand("feasible", "Check whether a desired deviation stays inside the class bounds");
  feas_cmd->add_option("--score", feas.score, "Original score")->required();
  feas_cmd->add_option("--delta", feas.delta, "Desired deviation")->required();
  feas_cmd->add_option("--dist", feas.dist, "Class distribution")->required();

  cli::EditOptions ed;
  auto* edit_cmd = app.add_subcommand("edit", "Optimize edit intensity through decode / re-encode");
  edit_cmd->add_option("--backend", ed.backend, "Mock configuration, or exec:<command> for a model server")->required();
  edit_cmd->add_option("--axis", ed.axis, "Axis file")->required();
  edit_cmd->add_option("--dist-male", ed.dist_male, "Male distribution")->required();
  edit_cmd->add_option("--dist-female", ed.dist_female, "Female distribution")->required();
  edit_cmd->add_option("--image", ed.image, "Image id, or <dataset>#<row>");
  edit_cmd->add_option("--delta", ed.delta, "Desired deviation (axis units; suffix 's' for class sigmas)");
  edit_cmd->add_option("--batch", ed.batch, "File of '<image> <delta>' lines");
  edit_cmd->add_option("--t", ed.t, "Threshold T (tolerance T * sigma)");
  edit_cmd->add_option("--s", ed.s, "Step divisor s");
  edit_cmd->add_option("--max-iters", ed.max_iters, "Iteration cap");
  edit_cmd->add_option("--layers", ed.layers, "W+ layers for external backends")->check(CLI::PositiveNumber);
  edit_cmd->add_option("--jobs", ed.jobs, "Parallel backend sessions")->check(CLI::PositiveNumber);
  edit_cmd->add_option("--seed", ed.seed, "Run seed (recorded)");
  edit_cmd->add_option("--out", ed.out, "Directory for traces and response.csv");

  cli::FrechetOptions fr;
  auto* fr_cmd = app.add_subcommand("frechet", "Frechet distance between Gaussian fits of two datasets");
  fr_cmd->add_option("--a", fr.a, "First dataset prefix")->required();
  fr_cmd->add_option("--b", fr.b, "Second dataset prefix")->required();

  std::string serve_backend;
  auto* serve_cmd = app.add_subcommand("serve-mock", "Serve a mock backend over line-delimited JSON on stdio");
  serve_cmd->add_option("--backend", serve_backend, "Mock configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsage;
  }

  try {
    if (*gen_cmd) return cli::gen_mock(gen, std::cout, std::cerr);
    if (*fit_cmd) return cli::fit_axis(fit, std::cout, std::cerr);
    if (*dist_cmd) return cli::fit_dist(dist, std::cout, std::cerr);
    if (*feas_cmd) return cli::feasible(feas, std::cout, std::cerr);
    if (*edit_cmd) return cli::edit(ed, std::cout, std::cerr);
    if (*fr_cmd) return cli::frechet(fr, std::cout, std::cerr);
    if (*serve_cmd) return cli::serve_mock(serve_backend, std::cin, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "axisedit: " << e.what() << '\n';
    return cli::kUsage;
  }
  return cli::kUsage;
}
