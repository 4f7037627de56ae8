// Command-line runner for the experiments in phflat/experiments.hpp.
//
//   phflat-experiments <subcommand> [--config FILE] [--workers N] [--seed S] [--out DIR]
//
// Every run writes its output files, the normalized configuration
// (config.json) and a manifest (manifest.json) with the configuration hash,
// library versions, seed and output hashes into the output directory.
// Exit codes: 0 success, 1 usage or input error, 2 precondition error,
// 3 truncated by a work budget (partial output is still written).

#include <openssl/evp.h>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <filesystem>
#include <fstream>
#include <gmp.h>
#include <iostream>

#include "CLI11.hpp"
#include "phflat/experiments.hpp"

#ifndef PHFLAT_VERSION
#define PHFLAT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using phflat::experiments::Json;

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw phflat::ArgumentError("cannot write '" + path.string() + "'");
  os << contents;
}

Json versions() {
  return Json{{"phflat", PHFLAT_VERSION},
              {"csv_schema", phflat::experiments::kCsvSchema},
              {"compiler", __VERSION__},
              {"gmp", gmp_version},
              {"boost", BOOST_LIB_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION)},
              {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

struct Options {
  std::string config;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_kind(const std::string& kind, const Options& o) {
  Json given = Json::object();
  std::string base_dir = ".";
  if (!o.config.empty()) {
    try {
      given = Json::parse(phflat::experiments::detail::read_file(o.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw phflat::ParseError("config '" + o.config + "': " + e.what());
    }
    base_dir = fs::path(o.config).parent_path().string();
    if (base_dir.empty()) base_dir = ".";
  }
  // Command-line flags override the configuration file.
  if (o.workers) given["workers"] = *o.workers;
  if (o.seed) given["seed"] = *o.seed;
  if (!o.out.empty()) given["out"] = o.out;
  Json cfg = phflat::experiments::normalize_config(kind, given);
  if (cfg["out"].get<std::string>().empty()) cfg["out"] = "out/" + kind;

  phflat::experiments::RunContext ctx;
  ctx.workers = cfg["workers"].get<int>();
  ctx.seed = cfg["seed"].get<std::uint64_t>();
  ctx.base_dir = base_dir;
  if (ctx.workers < 1) throw phflat::ArgumentError("--workers must be >= 1");

  const fs::path dir = cfg["out"].get<std::string>();
  fs::create_directories(dir);
  const std::string cfg_text = cfg.dump(2) + "\n";
  write_file(dir / "config.json", cfg_text);

  const auto result = phflat::experiments::run(kind, cfg, ctx);
  Json outputs = Json::object();
  for (const auto& f : result.files) {
    write_file(dir / f.name, f.contents);
    outputs[f.name] = sha256_hex(f.contents);
  }
  const Json manifest{{"command", kind},         {"config_sha256", sha256_hex(cfg_text)}, {"seed", ctx.seed}, {"workers", ctx.workers},
                      {"truncated", result.truncated}, {"config", cfg},                         {"outputs", outputs}, {"versions", versions()}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << result.summary << "outputs written to " << dir.string() << "\n";
  return result.truncated ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic-point growth, germ synthesis and signature experiments"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;
  for (const auto& kind : phflat::experiments::kinds()) {
    CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", opt.config, "JSON configuration file (defaults apply to missing keys)")->check(CLI::ExistingFile);
    sub->add_option("--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed, "random seed");
    sub->add_option("--out", opt.out, "output directory (default out/<subcommand>)");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return run_kind(chosen, opt);
  } catch (const phflat::PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
