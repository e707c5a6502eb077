#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scpw/chip.hpp"
#include "scpw/resfit.hpp"

namespace scpw {

enum class RunMode { design, sweep, mc, synth, fit, tls };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

struct SynthSettings {
  double q_internal = 2.5e6;
  double phi = 0.0;           // [rad]
  double noise_sigma = 0.0;   // per quadrature
  int points_per_resonator = 2001;
  double span_linewidths = 60.0;  // window width per resonator, in loaded linewidths
};

struct SweepSettings {
  std::string variable;             // "thickness" or "geometry"
  std::vector<double> d_list;       // [m], thickness sweep
  std::vector<double> d_list_nm;    // as configured, for tables
  double footprint = 0.0;           // [m], w + 2s for geometry sweep
  std::vector<double> gap_list;     // [m], geometry sweep
  std::vector<double> gap_list_um;  // as configured, for tables
  bool sigma_is_default = true;     // default disorder is 2% of each swept d
};

struct FitSettings {
  std::vector<std::filesystem::path> traces;
  int n_resonators = 1;  // resonances expected per trace file
};

struct TlsSettings {
  std::filesystem::path sweep_csv;
  double frequency = 0.0;    // [Hz]
  double temperature = 0.0;  // [K]
};

/// A fully resolved run: everything the tool needs, in SI units, plus the
/// canonical echo of the configuration it came from. Re-parsing the echo
/// reproduces this struct bit-exactly.
struct RunConfig {
  RunMode mode = RunMode::design;
  ChipDesign chip;
  ThicknessModel thickness;
  AttenuationChain chain;
  bool has_chain = false;
  std::uint64_t seed = 0;
  int n_trials = 1000;
  int n_threads = 1;
  SynthSettings synth;
  SweepSettings sweep;
  FitSettings fit;
  TlsSettings tls;
  std::filesystem::path out_dir = ".";

  nlohmann::json echo;  // canonical config document, defaults materialized
};

/// Strict config parsing: unknown keys, missing fields, wrong types and
/// out-of-range values are all reported with their full key path in a single
/// ConfigError.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_json(const nlohmann::json& doc,
                            const std::filesystem::path& base_dir = ".");

/// Trace CSV: header `freq_hz,re_s21,im_s21` with an optional constant
/// `power_dbm` fourth column. Errors carry the offending line number.
S21Trace read_trace(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, const S21Trace& trace);

/// Write-temp-then-rename so interrupted runs never leave partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Executes the configured run, writes report.json plus the per-mode CSV
/// tables under config.out_dir, and returns the report document.
nlohmann::json run(const RunConfig& config);

}  // namespace scpw
