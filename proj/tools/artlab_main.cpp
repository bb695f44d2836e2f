#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "artlab/error.hpp"
#include "artlab/experiment.hpp"
#include "artlab/manifest.hpp"

namespace {

enum Exit : int { kOk = 0, kInvalid = 1, kIo = 2, kIntegrity = 3 };

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return kOk;
  } catch (const artlab::ConfigError& e) {
    std::cerr << e.report().dump(2) << "\n";
    return kInvalid;
  } catch (const artlab::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const artlab::IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const artlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"artlab: masked latent diffusion sampling experiments on synthetic problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment config and write its artifacts");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Override the output directory");
  run->add_option("--trials", trials, "Override the trial count");
  run->add_option("--threads", threads, "Worker threads for concurrent trials");

  std::vector<std::string> manifests;
  auto* compare = app.add_subcommand("compare", "Verify manifests and summarize per solver");
  compare->add_option("manifests", manifests, "manifest.json files")->required();

  std::string dump_path;
  std::string render_out;
  std::optional<double> lo;
  std::optional<double> hi;
  auto* render = app.add_subcommand("render", "Convert a field dump to PGM/PPM");
  render->add_option("dump", dump_path, "Field dump (.artf)")->required();
  render->add_option("--out", render_out, "Output image (default: dump path with .pgm/.ppm)");
  render->add_option("--lo", lo, "Value mapped to black (default: data minimum)");
  render->add_option("--hi", hi, "Value mapped to white (default: data maximum)");

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "Check every file hash listed in a manifest");
  verify->add_option("manifest", verify_path, "manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  if (*run) {
    return guarded([&] {
      auto cfg = artlab::load_config(config_path);
      artlab::RunOverrides ov{seed, trials, threads, out_dir};
      const auto manifest = artlab::run_experiment(std::move(cfg), ov);
      std::cout << "wrote " << manifest.rows.size() << " rows and " << manifest.files.size()
                << " files to " << manifest.output_dir.string() << "\n";
    });
  }
  if (*compare) {
    return guarded([&] {
      std::vector<std::filesystem::path> paths(manifests.begin(), manifests.end());
      std::cout << artlab::format_summary(artlab::compare_manifests(paths));
    });
  }
  if (*render) {
    return guarded([&] {
      std::filesystem::path out = render_out;
      if (out.empty()) out = std::filesystem::path(dump_path).replace_extension(".pnm");
      artlab::render_dump(dump_path, out, lo, hi);
      std::cout << "wrote " << out.string() << "\n";
    });
  }
  return guarded([&] {
    const auto result = artlab::verify_manifest(verify_path);
    for (const auto& p : result.problems) std::cout << p << "\n";
    if (!result.ok) throw artlab::IntegrityError("manifest verification failed");
    std::cout << "ok\n";
  });
}
