// latticeqo {bands|dos|evolve|sweep|fit} --config <file> [--out <dir>] [--override key=value]...
//
// Exit codes: 0 success, 2 configuration or usage error, 1 runtime or
// numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace latticeqo;
  using namespace latticeqo::cli;

  CLI::App app{"Emitter dynamics in square and Lieb photonic lattices"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string command, config_file, out_dir, data_file;
  std::vector<std::string> overrides;
  app.add_option("command", command, "bands, dos, evolve, sweep or fit")
      ->required()
      ->check(CLI::IsMember({"bands", "dos", "evolve", "sweep", "fit"}));
  app.add_option("-c,--config", config_file, "run configuration (INI)")->required();
  app.add_option("-o,--out", out_dir, "output directory (default: output.dir, else .)");
  app.add_option("--override", overrides, "section.key=value, applied after the file")->take_all();
  app.add_option("--data", data_file, "fit: (lambda, V) CSV, overrides fit.data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    RunContext ctx;
    ctx.config = Config::load(config_file);
    for (const auto& o : overrides) ctx.config.apply_override(o);
    ctx.meta.config_hash = ctx.config.hash();
    ctx.out_dir = out_dir.empty() ? ctx.config.get_string("output.dir", ".") : out_dir;
    std::filesystem::create_directories(ctx.out_dir);

    if (command == "bands")
      cmd_bands(ctx);
    else if (command == "dos")
      cmd_dos(ctx);
    else if (command == "evolve")
      cmd_evolve(ctx);
    else if (command == "sweep")
      cmd_sweep(ctx);
    else
      cmd_fit(ctx, data_file);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "latticeqo " << command << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "latticeqo " << command << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "latticeqo " << command << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}
