#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "slc/slc.h"

namespace {

constexpr const char* kDefaultOutDir = "slc-out";
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

struct ReportHandle {
  slc_report* p = nullptr;
  ~ReportHandle() { slc_report_destroy(p); }
};

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return static_cast<bool>(out);
}

int validate_command(const std::string& subcommand, const std::string& text, const uint64_t* seed,
                     const size_t* realizations) {
  ReportHandle rep;
  if (slc_config_validate(subcommand.c_str(), text.c_str(), seed, realizations, &rep.p) != SLC_OK) {
    std::cerr << "error: " << slc_last_error() << "\n";
    return kExitRuntime;
  }
  const std::string json = slc_report_json(rep.p);
  std::cout << json;
  return json.find("\"valid\": true") != std::string::npos ? kExitOk : kExitInvalid;
}

int run_command(const std::string& subcommand, const std::string& text, const uint64_t* seed, const size_t* realizations,
                std::size_t threads, std::string out_dir) {
  const auto start = std::chrono::steady_clock::now();
  ReportHandle rep;
  const slc_status st = slc_run(subcommand.c_str(), text.c_str(), seed, realizations, threads, &rep.p);
  if (st != SLC_OK) {
    std::cerr << "error (" << slc_status_string(st) << "): " << slc_last_error() << "\n";
    return st == SLC_ERR_INVALID_ARGUMENT || st == SLC_ERR_DIMENSION ? kExitInvalid : kExitRuntime;
  }
  if (out_dir.empty()) out_dir = *slc_report_output_dir(rep.p) ? slc_report_output_dir(rep.p) : kDefaultOutDir;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '" << out_dir << "': " << ec.message() << "\n";
    return kExitRuntime;
  }
  const std::filesystem::path dir(out_dir);
  bool ok = write_file(dir / "summary.json", slc_report_json(rep.p));
  for (std::size_t i = 0; i < slc_report_table_count(rep.p); ++i)
    ok = write_file(dir / slc_report_table_name(rep.p, i), slc_report_table_csv(rep.p, i)) && ok;
  if (!ok) {
    std::cerr << "error: failed to write outputs to '" << out_dir << "'\n";
    return kExitRuntime;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << subcommand << ": wrote " << (dir / "summary.json").string() << " (" << elapsed << " s)\n";
  if (!slc_report_valid(rep.p)) {
    std::cerr << "error: too many realizations blew up; results are flagged invalid\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contraction analysis of ODEs and Ito SDEs"};
  std::string command, target, config_path, out_dir;
  std::optional<uint64_t> seed;
  std::optional<size_t> realizations;
  std::size_t threads = 1;
  app.add_option("command", command,
                 "measure | llc | sllc | bound | audit | simulate | experiment | scan | sync | reproduce-vdp | validate")
      ->required();
  app.add_option("subcommand", target, "Subcommand to validate against (validate only)");
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory (default: the config's output_dir, else slc-out)");
  app.add_option("--realizations", realizations, "Monte Carlo realizations (overrides the config)");
  app.add_option("--threads", threads, "Worker threads; never changes results")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  std::string text;
  if (!config_path.empty()) {
    auto t = read_file(config_path);
    if (!t) {
      std::cerr << "error: cannot read config file '" << config_path << "'\n";
      return kExitInvalid;
    }
    text = std::move(*t);
  }
  const uint64_t* seed_ptr = seed ? &*seed : nullptr;
  const size_t* real_ptr = realizations ? &*realizations : nullptr;
  if (command == "validate") return validate_command(target, text, seed_ptr, real_ptr);
  if (!target.empty()) {
    std::cerr << "error: unexpected argument '" << target << "'\n";
    return kExitInvalid;
  }
  return run_command(command, text, seed_ptr, real_ptr, threads, out_dir);
}
