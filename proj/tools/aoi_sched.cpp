// aoi_sched: offline / online / index / sweep experiments for Whittle-index
// AoI scheduling over unreliable channels.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <thread>

#include "aoi/cli.hpp"
#include "aoi/errors.hpp"

namespace {

struct Flags {
  std::string scenario_file;
  std::string policies;
  std::string out = "out";
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::size_t> sizes{4, 6, 8, 10};
  std::size_t max_states = aoi::exact::ExactLimits{}.max_states;
  aoi::sim::ScenarioSpec spec;
};

struct Overrides {
  CLI::Option* users = nullptr;
  CLI::Option* channels = nullptr;
  CLI::Option* states = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* repeats = nullptr;
  CLI::Option* horizon = nullptr;
  CLI::Option* h_min = nullptr;
  CLI::Option* h_max = nullptr;
  CLI::Option* rho_min = nullptr;
  CLI::Option* rho_max = nullptr;
  CLI::Option* tau_min = nullptr;
  CLI::Option* tau_max = nullptr;
};

void add_common(CLI::App* cmd, Flags& f, Overrides& o, aoi::sim::ScenarioSpec& inline_spec) {
  cmd->add_option("--scenario", f.scenario_file, "Scenario file (key = value lines)");
  cmd->add_option("--policies", f.policies, "Comma-separated policy tags, e.g. idx-v-r,m-S,idx-v-r:10");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--workers", f.workers, "Worker threads for independent trials");
  o.seed = cmd->add_option("--seed", inline_spec.seed, "Master seed");
  o.repeats = cmd->add_option("--repeats", inline_spec.repeats, "Repeats (trial seeds, or scenarios offline)");
  o.horizon = cmd->add_option("--horizon", inline_spec.horizon, "Epochs per trial");
  o.users = cmd->add_option("--users,-N", inline_spec.users, "Number of users");
  o.channels = cmd->add_option("--channels,-M", inline_spec.channels, "Number of channels");
  o.states = cmd->add_option("--states,-S", inline_spec.states, "AoI cap per user");
  o.h_min = cmd->add_option("--h-min", inline_spec.h_min, "Holding-cost sampling lower bound");
  o.h_max = cmd->add_option("--h-max", inline_spec.h_max, "Holding-cost sampling upper bound");
  o.rho_min = cmd->add_option("--rho-min", inline_spec.rho_min, "Success-rate lower bound");
  o.rho_max = cmd->add_option("--rho-max", inline_spec.rho_max, "Success-rate upper bound");
  o.tau_min = cmd->add_option("--tau-min", inline_spec.tau_min, "Transmission-cost lower bound");
  o.tau_max = cmd->add_option("--tau-max", inline_spec.tau_max, "Transmission-cost upper bound");
}

template <typename T>
void take(CLI::Option* opt, T& dst, const T& src) {
  if (opt && opt->count() > 0) dst = src;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whittle-index uplink scheduling for AoI holding costs over unreliable channels"};
  app.require_subcommand(1);

  Flags flags;
  std::map<const CLI::App*, Overrides> per_command;
  aoi::sim::ScenarioSpec inline_spec;

  auto* offline = app.add_subcommand("offline", "Exact gains of opt and heuristics via policy iteration / Poisson equation");
  auto* online = app.add_subcommand("online", "Simulated trials with online channel estimation");
  auto* index = app.add_subcommand("index", "Index table, oracle check and threshold cost envelope");
  auto* sweep = app.add_subcommand("sweep", "Online suite over N in --sizes with M = N / 2");
  for (auto* cmd : {offline, online, index, sweep}) add_common(cmd, flags, per_command[cmd], inline_spec);
  offline->add_option("--max-states", flags.max_states, "Joint state limit for exact methods");
  sweep->add_option("--sizes", flags.sizes, "User counts")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : aoi::cli::kValidation;
  }

  try {
    aoi::cli::RunManifest manifest;
    const CLI::App* chosen = app.get_subcommands().front();
    const std::string sub = chosen->get_name();
    const Overrides& overrides = per_command.at(chosen);
    manifest.subcommand = sub;

    aoi::sim::ScenarioSpec& spec = manifest.scenario;
    std::string default_policies = "idx-v,idx-c,idx-v-r,idx-c-r,idx-v-r:10,idx-v-r:-10,idx-v-r-q,m-S,m-T";
    if (sub == "offline") {
      spec.users = 3;
      spec.channels = 2;
      spec.repeats = 1;
      default_policies = "opt,idx-v,idx-c,idx-v-r,idx-c-r,m-S,m-T";
    } else if (sub == "sweep") {
      default_policies = "idx-v,idx-c,idx-v-r,idx-c-r,m-S,m-T";
    }
    if (!flags.scenario_file.empty()) aoi::cli::apply_scenario_file(flags.scenario_file, spec);
    take(overrides.users, spec.users, inline_spec.users);
    take(overrides.channels, spec.channels, inline_spec.channels);
    take(overrides.states, spec.states, inline_spec.states);
    take(overrides.seed, spec.seed, inline_spec.seed);
    take(overrides.repeats, spec.repeats, inline_spec.repeats);
    take(overrides.horizon, spec.horizon, inline_spec.horizon);
    take(overrides.h_min, spec.h_min, inline_spec.h_min);
    take(overrides.h_max, spec.h_max, inline_spec.h_max);
    take(overrides.rho_min, spec.rho_min, inline_spec.rho_min);
    take(overrides.rho_max, spec.rho_max, inline_spec.rho_max);
    take(overrides.tau_min, spec.tau_min, inline_spec.tau_min);
    take(overrides.tau_max, spec.tau_max, inline_spec.tau_max);

    if (sub != "index") {
      manifest.policies = aoi::parse_scheduler_list(flags.policies.empty() ? default_policies : flags.policies);
    }
    manifest.out_dir = flags.out;
    manifest.workers = flags.workers;
    manifest.sizes = flags.sizes;
    manifest.limits.max_states = flags.max_states;

    if (sub == "offline") {
      aoi::cli::cmd_offline(manifest);
    } else if (sub == "online") {
      aoi::cli::cmd_online(manifest);
    } else if (sub == "index") {
      if (!aoi::cli::cmd_index(manifest)) return aoi::cli::kNumerical;
    } else {
      aoi::cli::cmd_sweep(manifest);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return aoi::cli::exit_code_for(e);
  }
  return aoi::cli::kOk;
}
