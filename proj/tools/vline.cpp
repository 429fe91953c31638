#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "vline/vline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Attenuated V-line transform: simulation, reconstruction and checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool deterministic = false;
  std::uint64_t seed = 0;
  bool mismatch = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides [output] dir)");
    sub->add_flag("--deterministic", deterministic, "Bit-identical results regardless of thread count");
    sub->add_option("--seed", seed, "Master seed (overrides [run] seed)");
  };
  auto* phantom = app.add_subcommand("phantom", "Rasterize the configured phantom");
  auto* forward = app.add_subcommand("forward", "Simulate data, optionally with noise");
  auto* reconstruct = app.add_subcommand("reconstruct", "Run every [solver.NAME] section");
  auto* adjoint = app.add_subcommand("adjoint-test", "Randomized dot-product adjointness test");
  auto* spectral = app.add_subcommand("verify-spectral", "Harmonic decomposition check");
  for (auto* sub : {phantom, forward, reconstruct, adjoint, spectral}) add_common(sub);
  adjoint->add_flag("--mismatch", mismatch, "Pair the forward operator with a wrong adjoint");

  CLI11_PARSE(app, argc, argv);

  try {
    vline::ExperimentConfig cfg = vline::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (deterministic) cfg.deterministic = true;
    if (app.get_subcommands().front()->count("--seed")) cfg.seed = seed;

    if (phantom->parsed()) return vline::cmd_phantom(cfg);
    if (forward->parsed()) return vline::cmd_forward(cfg);
    if (reconstruct->parsed()) return vline::cmd_reconstruct(cfg);
    if (adjoint->parsed()) return vline::cmd_adjoint_test(cfg, mismatch);
    if (spectral->parsed()) return vline::cmd_verify_spectral(cfg);
  } catch (const vline::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return vline::kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return vline::kIo;
  } catch (const vline::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return vline::kValidation;
  } catch (const vline::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return vline::kValidation;
  }
  return vline::kValidation;
}
