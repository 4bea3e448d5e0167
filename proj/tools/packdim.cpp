#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "packdim/error.hpp"
#include "packdim/harness.hpp"

namespace {

std::string flag_name(std::string key) {
  for (char& c : key) {
    if (c == '.' || c == '_') c = '-';
  }
  return "--" + key;
}

struct Sub {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;  // config key -> flag text
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
  std::vector<std::string> sets;
  bool serial = false;
  CLI::Option* serial_opt = nullptr;
  // generate only
  std::string kind;
  std::map<std::string, std::string> gen;
  std::map<std::string, CLI::Option*> gen_opts;
  std::vector<std::string> xs;
};

void add_config_flags(Sub& s, bool skip_measure) {
  for (const auto& k : packdim::config_keys()) {
    const std::string key = k.key;
    if (key == "serial") {
      s.serial_opt = s.app->add_flag("--serial", s.serial, k.help);
      continue;
    }
    if (skip_measure && key == "measure") continue;
    s.options[key] = s.app->add_option(flag_name(key), s.values[key], std::string(k.help) + " [" + k.fallback + "]");
  }
  s.app->add_option("--config", s.config_file, "key = value configuration file");
  s.app->add_option("--set", s.sets, "extra key=value assignment (repeatable)");
}

packdim::RunConfig build_config(const std::string& command, const Sub& s) {
  packdim::RunConfig cfg(command);
  if (!s.config_file.empty()) cfg.load_file(s.config_file);
  if (const char* env = std::getenv("PACKDIM_SEED"); env != nullptr && *env != '\0') cfg.set("seed", env);
  for (const auto& a : s.sets) cfg.assign(a);
  for (const auto& [key, opt] : s.options) {
    if (opt->count() > 0) cfg.set(key, s.values.at(key));
  }
  if (s.serial) cfg.set("serial", "true");
  return cfg;
}

std::string generator_spec(const Sub& s) {
  if (s.kind == "product") {
    const auto a = s.gen.at("a");
    const auto b = s.gen.at("b");
    if (a.empty() || b.empty()) throw packdim::ParameterError("product needs --a and --b");
    return "product:" + a + "|" + b;
  }
  std::string spec = s.kind + ":";
  bool first = true;
  auto add = [&](const std::string& k, const std::string& v) {
    spec += (first ? "" : ",") + k + "=" + v;
    first = false;
  };
  for (const auto& [k, opt] : s.gen_opts) {
    if (k == "a" || k == "b" || opt->count() == 0) continue;
    add(k.rfind("sparse-", 0) == 0 ? k.substr(7) : k, s.gen.at(k));
  }
  for (const auto& x : s.xs) add("x", x);
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packing-dimension estimation, projection and fBm experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", packdim::kToolVersion);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate", "write a synthetic measure file"},
      {"estimate", "dimension estimates for one measure"},
      {"verify", "projection and fBm theorem verdicts"},
      {"envelope", "regular envelope, regularity and growth checks"},
      {"fbm", "fBm image experiment"},
  };
  std::map<std::string, std::unique_ptr<Sub>> subs;
  for (const auto& [name, help] : commands) {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, help);
    const bool gen = name == "generate";
    add_config_flags(*s, gen);
    if (gen) {
      s->app->add_option("kind", s->kind, "cantor, grid, sparse, atom, product or a full spec")->required();
      for (const std::string k : {"ratio", "depth", "n", "k", "sparse-h", "sparse-p", "sparse-seed", "a", "b"}) {
        s->gen[k];
        s->gen_opts[k] = s->app->add_option("--" + k, s->gen[k], "generator parameter");
      }
      s->app->add_option("--x", s->xs, "atom coordinate (repeatable)");
    }
    subs[name] = std::move(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (const auto& [name, s] : subs) {
    if (!s->app->parsed()) continue;
    try {
      packdim::RunConfig cfg = build_config(name, *s);
      if (name == "generate") {
        cfg.set("measure", s->kind.find(':') != std::string::npos ? s->kind : generator_spec(*s));
      }
      const auto out = packdim::run_command(cfg);
      const auto path = packdim::write_outputs(cfg, out);
      std::cout << packdim::render_report(out);
      std::cerr << "wrote " << path.string() << '\n';
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "packdim " << name << ": " << e.what() << '\n';
      return packdim::exit_code_for(e);
    }
  }
  return 2;
}
