#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scpw/errors.hpp"
#include "scpw/io.hpp"
#include "scpw/version.hpp"

namespace {

struct ModeArgs {
  scpw::RunMode mode{};
  CLI::App* sub = nullptr;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int trials = 0;
  int threads = 0;
  std::vector<std::string> traces;
};

void emit_error(const std::string& type, const std::string& message) {
  nlohmann::json err{{"error", {{"type", type}, {"message", message}}}};
  std::cout << err.dump(2) << std::endl;
}

int execute(const ModeArgs& args) {
  scpw::RunConfig cfg = scpw::parse_config(args.config);
  if (cfg.mode != args.mode) {
    throw scpw::ConfigError("mode: config says '" + scpw::to_string(cfg.mode) +
                            "' but the '" + scpw::to_string(args.mode) +
                            "' subcommand was invoked");
  }
  if (args.sub->count("--seed") > 0) {
    cfg.seed = args.seed;
    cfg.echo["seed"] = cfg.seed;
  }
  if (args.sub->count("--trials") > 0) {
    cfg.n_trials = args.trials;
    cfg.echo["n_trials"] = cfg.n_trials;
  }
  if (args.sub->count("--threads") > 0) {
    cfg.n_threads = args.threads;
    cfg.echo["n_threads"] = cfg.n_threads;
  }
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (!args.traces.empty()) {
    cfg.fit.traces.clear();
    nlohmann::json echo_list = nlohmann::json::array();
    for (const auto& t : args.traces) {
      auto p = std::filesystem::absolute(t).lexically_normal();
      cfg.fit.traces.push_back(p);
      echo_list.push_back(p.string());
    }
    cfg.echo["fit"]["trace_csv"] = echo_list;
  }

  scpw::run(cfg);
  std::cout << "wrote " << (cfg.out_dir / "report.json").string() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superconducting coplanar-waveguide resonator design and analysis toolkit"};
  app.set_version_flag("--version", std::string(scpw::tool_name) + " " + scpw::tool_version +
                                        " (config-schema " +
                                        std::to_string(scpw::config_schema_version) +
                                        ", trace-csv " +
                                        std::to_string(scpw::trace_format_version) + ", report " +
                                        std::to_string(scpw::report_format_version) + ")");
  app.require_subcommand(1);

  const std::pair<scpw::RunMode, const char*> modes[] = {
      {scpw::RunMode::design, "solve lengths and predicted frequencies for a chip"},
      {scpw::RunMode::sweep, "Monte Carlo MSE sweep over thickness or geometry"},
      {scpw::RunMode::mc, "Monte Carlo frequency-fluctuation analysis"},
      {scpw::RunMode::synth, "synthesize a composite S21 trace for a chip"},
      {scpw::RunMode::fit, "fit resonances in S21 trace files"},
      {scpw::RunMode::tls, "fit the TLS loss model to a power sweep"},
  };

  std::vector<ModeArgs> all_args(std::size(modes));
  for (std::size_t i = 0; i < std::size(modes); ++i) {
    ModeArgs& a = all_args[i];
    a.mode = modes[i].first;
    a.sub = app.add_subcommand(scpw::to_string(a.mode), modes[i].second);
    a.sub->add_option("--config", a.config, "configuration file (JSON)")->required();
    a.sub->add_option("--out", a.out, "output directory (default: current directory)");
    a.sub->add_option("--seed", a.seed, "override the RNG seed");
    a.sub->add_option("--trials", a.trials, "override the Monte Carlo trial count");
    a.sub->add_option("--threads", a.threads, "worker threads for Monte Carlo");
    if (a.mode == scpw::RunMode::fit) {
      a.sub->add_option("--trace", a.traces, "trace CSV file (repeatable)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& a : all_args) {
      if (a.sub->parsed()) return execute(a);
    }
    emit_error("usage", "no subcommand given");
    return 2;
  } catch (const scpw::ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const scpw::DomainError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const scpw::DataError& e) {
    emit_error("data", e.what());
    return 3;
  } catch (const scpw::ConvergenceError& e) {
    emit_error("convergence", e.what());
    return 4;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
}
