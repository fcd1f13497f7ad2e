#include "rrdps/cli.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "rrdps/attacksim.h"
#include "rrdps/csv.h"
#include "rrdps/keyrate.h"
#include "rrdps/montecarlo.h"
#include "rrdps/optimizer.h"

namespace rrdps::cli {
namespace {

struct Options {
  ProtocolParams params;
  std::string out_path;
  std::string config_path;
  SearchOptions search;
  std::vector<std::int64_t> M_list;
  bool optimize_M = false;
  double eta_min = 1e-7;
  double eta_max = 1.0;
  int eta_per_decade = 10;
  AttackScenario attack;
  std::int64_t trials = 10'000;
  std::uint64_t seed = 42;
  std::string mode = "standard";
  std::string detector = "pnr";
};

// Integers may be written as "1000", "1e3" or "1.28e5"; anything that is not
// an exact integer is rejected with the field name.
std::int64_t parse_integer(const std::string& field, const std::string& text) {
  std::int64_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec == std::errc() && ptr == end) return value;

  double real = 0.0;
  std::istringstream in(text);
  in >> real;
  if (!in.fail() && in.eof() && std::isfinite(real) && real == std::floor(real) && std::abs(real) < 9.0e18) {
    return static_cast<std::int64_t>(real);
  }
  throw CLI::ValidationError(field, fmt::format("'{}' is not an integer", text));
}

std::vector<std::int64_t> parse_integer_list(const std::string& field, const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_integer(field, item));
  }
  if (out.empty()) throw CLI::ValidationError(field, "empty list");
  return out;
}

template <typename Int>
void add_integer(CLI::App* app, const std::string& flag, const std::string& field, Int& target,
                 const std::string& help) {
  app->add_option_function<std::string>(
         flag, [&target, field](const std::string& text) { target = static_cast<Int>(parse_integer(field, text)); },
         help)
      ->type_name("INT");
}

void add_out_and_config(CLI::App* app, Options& o) {
  app->add_option("--out,-o", o.out_path, "Write the CSV here instead of stdout");
  app->add_option("--config", o.config_path,
                  "JSON file with the same field names as the flags; flags given on the command line win");
}

void add_channel_flags(CLI::App* app, Options& o) {
  add_integer(app, "--L", "L", o.params.block_size, "Pulses per block (default 128)");
  app->add_option("--e-sys", o.params.system_error, "Intrinsic system error rate (default 0.03)");
  app->add_option("--d-c", o.params.dark_count, "Dark count probability per detection slot (default 1e-9)");
  add_integer(app, "--c-d", "c_d", o.params.init_pulses, "Pulses elapsed during device initialization (default 0)");
  app->add_option("--detector", o.detector, "Detector model: pnr or threshold (default pnr)");
  app->add_option("--T", o.params.pulse_interval, "Pulse interval in seconds (metadata only)");
}

void add_search_flags(CLI::App* app, Options& o) {
  app->add_option("--mu-min", o.search.mu_min, "Lower end of the mu search grid (default 1e-6)");
  app->add_option("--mu-max", o.search.mu_max, "Upper end of the mu search grid (default 1)");
  add_integer(app, "--mu-per-decade", "mu_per_decade", o.search.points_per_decade,
              "Coarse mu grid density (default 20)");
  app->add_flag("--full-scan", o.search.full_threshold_scan, "Scan every nu_th instead of stopping early");
}

void add_M_list(CLI::App* app, Options& o, const std::string& help) {
  app->add_option_function<std::string>(
         "--M-list", [&o](const std::string& text) { o.M_list = parse_integer_list("M", text); }, help)
      ->type_name("INT,...");
}

void write_output(const Options& o, const std::string& content, std::ostream& out) {
  if (o.out_path.empty()) {
    out << content;
    return;
  }
  const std::filesystem::path target(o.out_path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error(fmt::format("cannot open '{}' for writing", tmp.string()));
    file << content;
    file.close();
    if (!file) {
      std::filesystem::remove(tmp);
      throw std::runtime_error(fmt::format("failed writing '{}'", tmp.string()));
    }
  }
  std::filesystem::rename(tmp, target);
}

// Turns a JSON config document into flag tokens placed ahead of the real
// command-line flags, so the latter take precedence.
std::vector<std::string> config_tokens(const std::string& path, std::string& command) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("config", fmt::format("cannot read '{}'", path));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ValidationError("config", fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
  if (!doc.is_object()) throw CLI::ValidationError("config", "top level must be an object");

  std::vector<std::string> tokens;
  for (const auto& [key, value] : doc.items()) {
    if (key == "command") {
      if (!value.is_string()) throw CLI::ValidationError("config", "'command' must be a string");
      command = value.get<std::string>();
      continue;
    }
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ',';
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      tokens.push_back(flag);
      tokens.push_back(joined);
    } else if (value.is_string()) {
      tokens.push_back(flag);
      tokens.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      tokens.push_back(flag);
      tokens.push_back(value.dump());
    } else {
      throw CLI::ValidationError(key, "unsupported value type in config");
    }
  }
  return tokens;
}

const std::set<std::string> kCommands = {"keyrate", "curve", "optimize", "attack", "mc-validate"};

// Splices config-file tokens in after the subcommand name.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::string config_command;
  std::vector<std::string> tokens = config_tokens(config_path, config_command);

  std::vector<std::string> expanded;
  auto command_it = std::find_if(args.begin(), args.end(), [](const auto& a) { return kCommands.count(a) > 0; });
  if (command_it == args.end()) {
    if (config_command.empty()) return args;  // let CLI11 report the missing subcommand
    expanded.push_back(config_command);
    expanded.insert(expanded.end(), tokens.begin(), tokens.end());
    expanded.insert(expanded.end(), args.begin(), args.end());
    return expanded;
  }
  expanded.assign(args.begin(), command_it + 1);
  expanded.insert(expanded.end(), tokens.begin(), tokens.end());
  expanded.insert(expanded.end(), command_it + 1, args.end());
  return expanded;
}

std::vector<double> eta_grid(const Options& o) {
  if (!(o.eta_min > 0.0)) throw ParamError("eta_min", fmt::format("must be positive, got {}", o.eta_min));
  if (!(o.eta_max >= o.eta_min && o.eta_max <= 1.0)) {
    throw ParamError("eta_max", fmt::format("must lie in [eta_min, 1], got {}", o.eta_max));
  }
  if (o.eta_per_decade < 1) throw ParamError("eta_per_decade", "must be at least 1");
  return log_grid(o.eta_min, o.eta_max, o.eta_per_decade);
}

std::string run_keyrate(Options& o) {
  const KeyRateResult r = key_rate(o.params);
  Optimum row{o.params.transmission, o.params.mean_photons, o.params.photon_threshold,
              o.params.blocks_per_sequence, r};
  return csv::key_rate_table({row}, o.params);
}

std::string run_optimize(Options& o) {
  Optimum best;
  if (o.optimize_M || !o.M_list.empty()) {
    const std::vector<std::int64_t> candidates = o.M_list.empty() ? default_M_candidates() : o.M_list;
    best = optimize_with_M(o.params, o.params.transmission, candidates, o.search);
  } else {
    best = optimize_point(o.params, o.params.transmission, o.params.blocks_per_sequence, o.search);
  }
  return csv::key_rate_table({best}, o.params);
}

std::string run_curve(Options& o) {
  const std::vector<double> grid = eta_grid(o);
  if (o.optimize_M) {
    const std::vector<std::int64_t> candidates = o.M_list.empty() ? default_M_candidates() : o.M_list;
    return csv::key_rate_table(sweep_optimal_M(o.params, grid, candidates, o.search), o.params);
  }
  CurveSpec spec{grid, o.M_list.empty() ? std::vector<std::int64_t>{o.params.blocks_per_sequence} : o.M_list,
                 o.params};
  return csv::key_rate_table(sweep_curves(spec, o.search), o.params);
}

std::string run_attack_command(Options& o) {
  const AttackStats stats = run_attack(o.attack, o.trials, o.seed);
  return std::string(csv::kAttackHeader) + "\n" + csv::attack_row(o.attack, o.trials, stats) + "\n";
}

std::string run_mc(Options& o) {
  McConfig cfg{o.params, o.trials, o.seed, parse_mc_mode(o.mode)};
  const McReport report = compare_to_analytic(cfg);
  std::string out = std::string(csv::kMcHeader) + "\n";
  for (const auto& row : report.rows) out += csv::mc_row(row) + "\n";
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Secret key rates and simulations for RRDPS QKD with slow basis choice", "rrdps"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* keyrate = app.add_subcommand("keyrate", "Evaluate the key rate at one parameter point");
  add_channel_flags(keyrate, o);
  add_integer(keyrate, "--M", "M", o.params.blocks_per_sequence, "Blocks per sequence (default 1)");
  keyrate->add_option("--eta", o.params.transmission, "Channel transmission")->required();
  keyrate->add_option("--mu", o.params.mean_photons, "Mean photon number per pulse")->required();
  add_integer(keyrate, "--nu-th", "nu_th", o.params.photon_threshold, "Source photon-number threshold (default 0)");
  add_out_and_config(keyrate, o);

  auto* optimize = app.add_subcommand("optimize", "Maximize the key rate over mu and nu_th (and optionally M)");
  add_channel_flags(optimize, o);
  add_integer(optimize, "--M", "M", o.params.blocks_per_sequence, "Blocks per sequence (default 1)");
  optimize->add_option("--eta", o.params.transmission, "Channel transmission")->required();
  add_M_list(optimize, o, "Candidate sequence lengths; implies --optimize-M");
  optimize->add_flag("--optimize-M", o.optimize_M, "Also optimize M (default candidates {1,2,5}x10^k)");
  add_search_flags(optimize, o);
  add_out_and_config(optimize, o);

  auto* curve = app.add_subcommand("curve", "Optimized key rate versus channel transmission");
  add_channel_flags(curve, o);
  add_M_list(curve, o, "One curve per sequence length (with --optimize-M: the candidate list)");
  curve->add_option("--eta-min", o.eta_min, "Smallest transmission (default 1e-7)");
  curve->add_option("--eta-max", o.eta_max, "Largest transmission (default 1)");
  add_integer(curve, "--eta-per-decade", "eta_per_decade", o.eta_per_decade, "Grid density (default 10)");
  curve->add_flag("--optimize-M", o.optimize_M, "Emit one row per eta at the optimal M");
  add_search_flags(curve, o);
  add_out_and_config(curve, o);

  auto* attack = app.add_subcommand("attack", "Simulate the intercept-resend attack on naive slow-basis BB84");
  attack->add_option("--p-z", o.attack.p_z, "Probability of the Z basis (default 0.99)");
  add_integer(attack, "--M", "M", o.attack.pulses_per_sequence, "Pulses per sequence (default 100)");
  add_integer(attack, "--n-sequences", "n_sequences", o.attack.sequences, "Sequences sent (default 10000)");
  add_integer(attack, "--n-measured", "n_measured", o.attack.measured, "Sequences Eve measures (default 99)");
  add_integer(attack, "--n-clean", "n_clean", o.attack.clean, "Sequences Eve forwards untouched (default 1)");
  attack->add_option("--eta-nominal", o.attack.eta_nominal, "Transmission the attack mimics (default 0.01)");
  add_integer(attack, "--trials", "trials", o.trials, "Simulated protocol runs (default 10000)");
  add_integer(attack, "--seed", "seed", o.seed, "PRNG seed (default 42)");
  add_out_and_config(attack, o);

  auto* mc = app.add_subcommand("mc-validate", "Compare the Monte Carlo detection chain with the closed forms");
  add_channel_flags(mc, o);
  add_integer(mc, "--M", "M", o.params.blocks_per_sequence, "Blocks per sequence (default 1)");
  mc->add_option("--eta", o.params.transmission, "Channel transmission")->required();
  mc->add_option("--mu", o.params.mean_photons, "Mean photon number per pulse")->required();
  add_integer(mc, "--trials", "trials", o.trials, "Simulated sequences (default 10000)");
  add_integer(mc, "--seed", "seed", o.seed, "PRNG seed (default 42)");
  mc->add_option("--mode", o.mode, "standard or beamdump (default standard)");
  add_out_and_config(mc, o);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    o.params.detector = parse_detector(o.detector);
    std::string content;
    if (keyrate->parsed()) {
      content = run_keyrate(o);
    } else if (optimize->parsed()) {
      content = run_optimize(o);
    } else if (curve->parsed()) {
      content = run_curve(o);
    } else if (attack->parsed()) {
      content = run_attack_command(o);
    } else {
      content = run_mc(o);
    }
    write_output(o, content, out);
  } catch (const ParamError& e) {
    err << "error: invalid value for " << e.field() << ": " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace rrdps::cli
