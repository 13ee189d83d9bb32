#include "aoi/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "aoi/errors.hpp"
#include "aoi/index.hpp"

namespace aoi::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kValidation;
  if (dynamic_cast<const SizeLimitError*>(&e)) return kSizeRefusal;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kValidation;
  return 1;
}

void RunManifest::validate() const {
  scenario.validate();
  if (subcommand != "index" && policies.empty()) throw ValidationError("no policies requested");
  if (subcommand == "sweep") {
    if (sizes.empty()) throw ValidationError("sweep needs at least one size");
    for (std::size_t n : sizes) {
      if (n < 3 || n % 2 != 0) throw ValidationError("sweep sizes must be even and at least 4 (M = N / 2)");
    }
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw ValidationError("cannot create output directory " + out_dir.string());
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in || !(in >> std::ws).eof()) throw ValidationError("bad value '" + text + "' for " + key);
  return value;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

}  // namespace

void apply_scenario_text(std::istream& in, sim::ScenarioSpec& spec) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("scenario line " + std::to_string(lineno) + " lacks '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "users") spec.users = parse_number<std::size_t>(key, value);
    else if (key == "channels") spec.channels = parse_number<std::size_t>(key, value);
    else if (key == "states") spec.states = parse_number<int>(key, value);
    else if (key == "h_min") spec.h_min = parse_number<double>(key, value);
    else if (key == "h_max") spec.h_max = parse_number<double>(key, value);
    else if (key == "rho_min") spec.rho_min = parse_number<double>(key, value);
    else if (key == "rho_max") spec.rho_max = parse_number<double>(key, value);
    else if (key == "tau_min") spec.tau_min = parse_number<double>(key, value);
    else if (key == "tau_max") spec.tau_max = parse_number<double>(key, value);
    else if (key == "horizon") spec.horizon = parse_number<int>(key, value);
    else if (key == "repeats") spec.repeats = parse_number<int>(key, value);
    else if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, value);
    else throw ValidationError("unknown scenario key '" + key + "'");
  }
}

void apply_scenario_file(const fs::path& path, sim::ScenarioSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read scenario file " + path.string());
  apply_scenario_text(in, spec);
}

std::string scenario_text(const sim::ScenarioSpec& spec) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "users = " << spec.users << "\nchannels = " << spec.channels << "\nstates = " << spec.states
      << "\nh_min = " << spec.h_min << "\nh_max = " << spec.h_max << "\nrho_min = " << spec.rho_min
      << "\nrho_max = " << spec.rho_max << "\ntau_min = " << spec.tau_min << "\ntau_max = " << spec.tau_max
      << "\nhorizon = " << spec.horizon << "\nrepeats = " << spec.repeats << "\nseed = " << spec.seed << '\n';
  return out.str();
}

std::string file_tag(const SchedulerKind& kind) {
  std::string tag = to_string(kind);
  std::replace(tag.begin(), tag.end(), ':', '_');
  return tag;
}

exact::PolicyTable induced_policy(const exact::CompositeMdp& composite, const SchedulerKind& kind) {
  switch (kind.tag) {
    case SchedulerTag::kOptimal:
    case SchedulerTag::kIndexValueUcb:
    case SchedulerTag::kIndexValueQ:
      throw ValidationError(to_string(kind) + " has no fixed state-feedback form for offline evaluation");
    default:
      break;
  }
  const SystemConfig& config = composite.config;
  std::vector<double> rho;
  for (const auto& c : config.channels) rho.push_back(c.success_prob);
  std::optional<IndexTable> table;
  if (kind.uses_index_table()) table = build_index_table(config, rho);

  exact::PolicyTable policy(composite.space.size());
  for (std::size_t s = 0; s < composite.space.size(); ++s) {
    const AoIState state = composite.space.decode(s);
    ScheduleInputs in{config, state, rho};
    in.table = table ? &*table : nullptr;
    policy[s] = composite.action_index(schedule(kind, in));
  }
  return policy;
}

std::vector<OfflineRow> evaluate_offline(const SystemConfig& config, const std::vector<SchedulerKind>& kinds,
                                         const exact::ExactLimits& limits) {
  const exact::CompositeMdp composite = exact::build_composite(config, limits);
  std::vector<OfflineRow> rows;
  for (const auto& kind : kinds) {
    double gain = 0.0;
    if (kind.tag == SchedulerTag::kOptimal) {
      gain = exact::policy_iteration(composite.mdp).evaluation.gain;
    } else {
      gain = exact::evaluate_policy(composite.mdp, induced_policy(composite, kind)).gain;
    }
    rows.push_back({kind, gain});
  }
  return rows;
}

void cmd_offline(const RunManifest& manifest) {
  manifest.validate();
  auto out = open_out(manifest.out_dir / "offline.csv");
  out << "scenario,policy,gain,gap_to_opt\n" << std::setprecision(17);
  for (int r = 0; r < manifest.scenario.repeats; ++r) {
    const SystemConfig config = sim::generate_scenario(manifest.scenario, manifest.scenario.seed + static_cast<std::uint64_t>(r));
    const auto rows = evaluate_offline(config, manifest.policies, manifest.limits);
    std::optional<double> opt;
    for (const auto& row : rows) {
      if (row.kind.tag == SchedulerTag::kOptimal) opt = row.gain;
    }
    for (const auto& row : rows) {
      out << r + 1 << ',' << to_string(row.kind) << ',' << row.gain << ',';
      if (opt) out << (row.gain - *opt) / std::abs(*opt);
      out << '\n';
    }
  }
}

void cmd_online(const RunManifest& manifest) {
  manifest.validate();
  const auto result = sim::run_suite(manifest.scenario, manifest.policies, manifest.workers);
  const fs::path trials = manifest.out_dir / "trials";
  fs::create_directories(trials);
  for (std::size_t p = 0; p < result.trials.size(); ++p) {
    for (std::size_t r = 0; r < result.trials[p].size(); ++r) {
      auto out = open_out(trials / (file_tag(manifest.policies[p]) + "_rep" + std::to_string(r + 1) + ".csv"));
      sim::write_trajectory_csv(out, result.trials[p][r]);
    }
  }
  auto summary = open_out(manifest.out_dir / "summary.json");
  summary << sim::summary_json(result) << '\n';
}

bool cmd_index(const RunManifest& manifest) {
  manifest.validate();
  const SystemConfig config = sim::generate_scenario(manifest.scenario, manifest.scenario.seed);
  std::vector<int> caps;
  for (std::size_t n = 0; n < config.users(); ++n) caps.push_back(config.cap(n));
  IndexTable table(config.channel_count(), caps, std::numeric_limits<double>::quiet_NaN());

  auto check = open_out(manifest.out_dir / "index_check.csv");
  auto lines = open_out(manifest.out_dir / "thresholds.csv");
  auto envelope = open_out(manifest.out_dir / "envelope.csv");
  check << "m,n,s,nu,nu_oracle,status\n" << std::setprecision(17);
  lines << "m,n,theta,holding,activation\n" << std::setprecision(17);
  envelope << "m,n,lambda,min_cost,theta_star\n" << std::setprecision(17);

  bool clean = true;
  for (std::size_t m = 0; m < config.channel_count(); ++m) {
    for (std::size_t n = 0; n < config.users(); ++n) {
      const ArmSpec spec = config.arm(m, n);
      for (int s = 1; s <= caps[n]; ++s) {
        check << m + 1 << ',' << n + 1 << ',' << s << ',';
        try {
          const double nu = analytic_index(spec, s);
          const double oracle = exact::index_bisection(spec, s);
          table.at(m, n, s) = nu;
          check << nu << ',' << oracle << ",ok\n";
        } catch (const NumericalError& e) {
          clean = false;
          check << "nan,nan,degenerate\n";
          std::cerr << "channel " << m + 1 << ", user " << n + 1 << ", age " << s << ": " << e.what() << '\n';
        }
      }
      std::vector<CostSplit> splits;
      for (int theta = 1; theta <= caps[n] + 1; ++theta) {
        splits.push_back(average_cost(spec, {theta}));
        lines << m + 1 << ',' << n + 1 << ',' << theta << ',' << splits.back().holding << ','
              << splits.back().activation << '\n';
      }
      const double lo = -spec.tx_cost - 50.0;
      const int points = static_cast<int>(std::lround((50.0 - lo) / 0.5));
      for (int i = 0; i <= points; ++i) {
        const double lambda = lo + 0.5 * i;
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int theta = 1; theta <= caps[n] + 1; ++theta) {
          const double j = splits[static_cast<std::size_t>(theta - 1)].total(spec.tx_cost, lambda);
          if (j < best - 1e-12) {
            best = j;
            arg = theta;
          }
        }
        envelope << m + 1 << ',' << n + 1 << ',' << lambda << ',' << best << ',' << arg << '\n';
      }
    }
  }
  auto out = open_out(manifest.out_dir / "index_table.csv");
  write_index_csv(out, table);
  return clean;
}

void cmd_sweep(const RunManifest& manifest) {
  manifest.validate();
  auto out = open_out(manifest.out_dir / "sweep.csv");
  out << "N,M,policy,mean,std\n" << std::setprecision(17);
  for (std::size_t n : manifest.sizes) {
    sim::ScenarioSpec spec = manifest.scenario;
    spec.users = n;
    spec.channels = n / 2;
    const auto result = sim::run_suite(spec, manifest.policies, manifest.workers);
    for (const auto& s : result.summaries) {
      out << spec.users << ',' << spec.channels << ',' << to_string(s.kind) << ',' << s.mean << ',' << s.std << '\n';
    }
  }
}

}  // namespace aoi::cli
