#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>

using namespace distgeom;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string format = "json";
  std::optional<double> eps0;
  std::optional<double> ratio;
  std::optional<int> levels;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "experiment config (TOML)")->required();
  sub->add_option("--out", o.out, "output directory (default $DISTGEOM_OUT or ./results)");
  sub->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--eps0", o.eps0, "override net.eps0");
  sub->add_option("--ratio", o.ratio, "override net.ratio");
  sub->add_option("--levels", o.levels, "override net.levels");
}

int run(const std::string& command, const Options& o) {
  const Config cfg = load_config(o.config);
  NetOverride ov{o.eps0, o.ratio, o.levels};
  std::filesystem::path out = o.out;
  if (out.empty()) {
    const char* env = std::getenv("DISTGEOM_OUT");
    out = env && *env ? env : "results";
  }
  const auto t0 = std::chrono::steady_clock::now();
  if (command == "suite") {
    const SuiteRecord s = run_suite(cfg, ov, [](const RunRecord& r, double secs) {
      std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << " (" << secs << " s)" << std::endl;
    });
    const auto paths = write_suite(s, out, o.format);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const Check& c : s.checks) std::cout << (c.passed ? "PASS " : "FAIL ") << s.name << "/" << c.name << "\n";
    std::cout << "suite " << s.name << " hash " << s.config_hash << " (" << secs << " s)\n";
    if (!s.passed())
      for (const auto& p : paths) std::cout << "report: " << p.string() << "\n";
    return s.passed() ? 0 : 1;
  }
  const std::string experiment = cfg.string("experiment");
  const std::string expected = command == "compat" ? "compat" : command;
  if (experiment != expected)
    throw ConfigError("config field 'experiment' is '" + experiment + "' but the command is '" + command + "'");
  const RunRecord r = run_experiment(cfg, ov);
  const auto paths = write_record(r, out, o.format);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const Check& c : r.checks)
    std::cout << (c.passed ? "PASS " : (c.gating ? "FAIL " : "WARN ")) << c.name << "\n";
  std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << " hash " << r.config_hash << " (" << secs << " s)\n";
  for (const auto& p : paths) std::cout << "report: " << p.string() << "\n";
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized tensor calculus experiments"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"embed", "evaluate iota on a grid and check consistency"},
      {"curvature", "curvature grids for a metric spec"},
      {"associate", "association of embedded fields across smoothing choices"},
      {"exponents", "moderateness and negligibility exponents"},
      {"cone", "cone curvature delta weight"},
      {"compat", "curvature of smooth metrics against closed forms"},
      {"commute", "Lie derivative commutation"},
      {"suite", "every experiment of a suite config"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), o);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
