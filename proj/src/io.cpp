#include "scpw/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <optional>
#include <set>

#include "scpw/errors.hpp"
#include "scpw/kinetic.hpp"
#include "scpw/resonator.hpp"
#include "scpw/rng.hpp"
#include "scpw/version.hpp"

namespace scpw {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::design: return "design";
    case RunMode::sweep: return "sweep";
    case RunMode::mc: return "mc";
    case RunMode::synth: return "synth";
    case RunMode::fit: return "fit";
    case RunMode::tls: return "tls";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& name) {
  for (RunMode m : {RunMode::design, RunMode::sweep, RunMode::mc, RunMode::synth, RunMode::fit,
                    RunMode::tls}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("mode: unknown mode '" + name + "'");
}

std::string format_double(double value) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

namespace {

std::string utc_now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Strict config reader: every accessor records its key, finish() rejects
// whatever was not consumed, and all complaints carry the full key path.
// ---------------------------------------------------------------------------
class Cursor {
 public:
  Cursor(const json* node, std::string path, std::vector<std::string>* errors)
      : node_(node), path_(std::move(path)), errors_(errors) {}

  bool valid() const { return node_ != nullptr && node_->is_object(); }
  bool has(const char* key) const { return valid() && node_->contains(key); }

  void error(const std::string& key, const std::string& message) const {
    errors_->push_back(join(key) + ": " + message);
  }

  double req_number(const char* key) { return number_impl(key, std::nullopt, true); }
  double opt_number(const char* key, double def) { return number_impl(key, def, false); }

  std::int64_t req_int(const char* key) { return int_impl(key, std::nullopt, true); }
  std::int64_t opt_int(const char* key, std::int64_t def) { return int_impl(key, def, false); }

  std::uint64_t opt_uint(const char* key, std::uint64_t def) {
    if (!mark_if_present(key)) return def;
    const json& v = (*node_)[key];
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      error(key, "expected an integer");
      return def;
    }
    if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
      error(key, "must be >= 0");
      return def;
    }
    return v.get<std::uint64_t>();
  }

  std::string req_string(const char* key) {
    if (!mark_if_present(key)) {
      error(key, "missing required field");
      return {};
    }
    const json& v = (*node_)[key];
    if (!v.is_string()) {
      error(key, "expected a string");
      return {};
    }
    return v.get<std::string>();
  }

  std::string opt_string(const char* key, std::string def) {
    if (!mark_if_present(key)) return def;
    const json& v = (*node_)[key];
    if (!v.is_string()) {
      error(key, "expected a string");
      return def;
    }
    return v.get<std::string>();
  }

  const json* opt_child(const char* key) {
    if (!mark_if_present(key)) return nullptr;
    const json& v = (*node_)[key];
    if (!v.is_object()) {
      error(key, "expected an object");
      return nullptr;
    }
    return &v;
  }

  const json* req_child(const char* key) {
    const json* child = opt_child(key);
    if (child == nullptr && valid() && !node_->contains(key)) {
      error(key, "missing required section");
    }
    return child;
  }

  const json* opt_array(const char* key) {
    if (!mark_if_present(key)) return nullptr;
    const json& v = (*node_)[key];
    if (!v.is_array()) {
      error(key, "expected an array");
      return nullptr;
    }
    return &v;
  }

  std::vector<double> req_number_list(const char* key) {
    std::vector<double> out;
    const json* arr = opt_array(key);
    if (arr == nullptr) {
      if (valid() && !node_->contains(key)) error(key, "missing required field");
      return out;
    }
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const json& v = (*arr)[i];
      if (!v.is_number()) {
        error(std::string(key) + "[" + std::to_string(i) + "]", "expected a number");
        continue;
      }
      out.push_back(v.get<double>());
    }
    return out;
  }

  Cursor descend(const json* child, const char* key) const {
    return Cursor(child, join(key), errors_);
  }

  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() {
    if (!valid()) return;
    for (const auto& item : node_->items()) {
      if (consumed_.count(item.key()) == 0) {
        errors_->push_back(join(item.key()) + ": unknown key");
      }
    }
  }

 private:
  bool mark_if_present(const char* key) {
    if (!valid() || !node_->contains(key)) return false;
    consumed_.insert(key);
    return true;
  }

  double number_impl(const char* key, std::optional<double> def, bool required) {
    if (!mark_if_present(key)) {
      if (required) error(key, "missing required field");
      return def.value_or(0.0);
    }
    const json& v = (*node_)[key];
    if (!v.is_number()) {
      error(key, "expected a number");
      return def.value_or(0.0);
    }
    return v.get<double>();
  }

  std::int64_t int_impl(const char* key, std::optional<std::int64_t> def, bool required) {
    if (!mark_if_present(key)) {
      if (required) error(key, "missing required field");
      return def.value_or(0);
    }
    const json& v = (*node_)[key];
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      error(key, "expected an integer");
      return def.value_or(0);
    }
    return v.get<std::int64_t>();
  }

  const json* node_;
  std::string path_;
  std::vector<std::string>* errors_;
  std::set<std::string> consumed_;
};

double positive(Cursor& c, const char* key, double value) {
  if (!(value > 0.0)) c.error(key, "must be > 0");
  return value;
}

}  // namespace

RunConfig parse_config_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  std::vector<std::string> errors;
  RunConfig cfg;
  json echo;

  Cursor root(&doc, "", &errors);
  const std::string mode_name = root.req_string("mode");
  bool mode_ok = true;
  try {
    cfg.mode = run_mode_from_string(mode_name);
  } catch (const ConfigError&) {
    errors.push_back("mode: unknown mode '" + mode_name + "'");
    mode_ok = false;
  }
  echo["mode"] = mode_name;

  cfg.seed = root.opt_uint("seed", 0);
  cfg.n_trials = static_cast<int>(root.opt_int("n_trials", 1000));
  if (cfg.n_trials < 1) root.error("n_trials", "must be >= 1");
  cfg.n_threads = static_cast<int>(root.opt_int("n_threads", 1));
  if (cfg.n_threads < 1) root.error("n_threads", "must be >= 1");
  echo["seed"] = cfg.seed;
  echo["n_trials"] = cfg.n_trials;
  echo["n_threads"] = cfg.n_threads;

  const bool needs_physics =
      mode_ok && (cfg.mode == RunMode::design || cfg.mode == RunMode::sweep ||
                  cfg.mode == RunMode::mc || cfg.mode == RunMode::synth);

  double d_nm = 0.0;
  if (const json* chip_node = needs_physics ? root.req_child("chip") : root.opt_child("chip")) {
    Cursor chip(chip_node, "chip", &errors);
    cfg.chip.n_resonators = static_cast<int>(chip.req_int("n_resonators"));
    if (cfg.chip.n_resonators < 2) chip.error("n_resonators", "must be >= 2");
    const double f_mean_ghz = positive(chip, "f_mean_ghz", chip.req_number("f_mean_ghz"));
    const double f_gap_mhz = positive(chip, "f_gap_mhz", chip.req_number("f_gap_mhz"));
    cfg.chip.f_mean = f_mean_ghz * 1e9;
    cfg.chip.f_gap = f_gap_mhz * 1e6;
    cfg.chip.q_c_nominal = positive(chip, "q_c_nominal", chip.req_number("q_c_nominal"));
    json geom_echo;
    if (const json* geom_node = chip.req_child("geom")) {
      Cursor geom(geom_node, "chip.geom", &errors);
      const double w_um = geom.req_number("w_um");
      const double s_um = geom.req_number("s_um");
      d_nm = geom.req_number("d_nm");
      if (!(w_um > 0.0)) geom.error("w_um", "must be > 0");
      if (!(s_um > 0.0)) geom.error("s_um", "must be > 0");
      if (!(d_nm > 0.0)) geom.error("d_nm", "must be > 0");
      if (d_nm > 0.0 && w_um > 0.0 && !(d_nm * 1e-3 < w_um)) {
        geom.error("d_nm", "film thickness must be smaller than the center width");
      }
      cfg.chip.geom.width = w_um * 1e-6;
      cfg.chip.geom.gap = s_um * 1e-6;
      cfg.chip.geom.thickness = d_nm * 1e-9;
      geom_echo = {{"w_um", w_um}, {"s_um", s_um}, {"d_nm", d_nm}};
      geom.finish();
    }
    chip.finish();
    echo["chip"] = {{"n_resonators", cfg.chip.n_resonators},
                    {"f_mean_ghz", f_mean_ghz},
                    {"f_gap_mhz", f_gap_mhz},
                    {"q_c_nominal", cfg.chip.q_c_nominal},
                    {"geom", geom_echo}};
  }

  if (const json* mat_node =
          needs_physics ? root.req_child("material") : root.opt_child("material")) {
    Cursor mat(mat_node, "material", &errors);
    const double lambda0_nm = positive(mat, "lambda0_nm", mat.req_number("lambda0_nm"));
    const double eps_r = mat.req_number("eps_r");
    if (!(eps_r >= 1.0)) mat.error("eps_r", "must be >= 1");
    const double temperature_k =
        positive(mat, "temperature_k", mat.req_number("temperature_k"));
    cfg.chip.mat.lambda0 = lambda0_nm * 1e-9;
    cfg.chip.mat.eps_r = eps_r;
    cfg.chip.mat.temperature = temperature_k;
    mat.finish();
    echo["material"] = {
        {"lambda0_nm", lambda0_nm}, {"eps_r", eps_r}, {"temperature_k", temperature_k}};
  }

  // Thickness disorder. The default sigma is 2% of the nominal thickness,
  // materialized in nm so the echo round-trips bit-exactly.
  {
    double sigma_d_nm = 0.02 * d_nm;
    double gradient_d_nm = 0.0;
    bool sigma_given = false;
    if (const json* tm_node = root.opt_child("thickness_model")) {
      Cursor tm(tm_node, "thickness_model", &errors);
      if (tm.has("sigma_d_nm")) {
        sigma_given = true;
        sigma_d_nm = tm.req_number("sigma_d_nm");
        if (sigma_d_nm < 0.0) tm.error("sigma_d_nm", "must be >= 0");
      }
      gradient_d_nm = tm.opt_number("gradient_d_nm", 0.0);
      tm.finish();
    }
    cfg.thickness.d_nominal = d_nm * 1e-9;
    cfg.thickness.sigma_d = sigma_d_nm * 1e-9;
    cfg.thickness.gradient_d = gradient_d_nm * 1e-9;
    cfg.sweep.sigma_is_default = !sigma_given;
    if (mode_ok && (cfg.mode == RunMode::mc || cfg.mode == RunMode::sweep)) {
      json tm_echo;
      if (sigma_given || cfg.mode == RunMode::mc) tm_echo["sigma_d_nm"] = sigma_d_nm;
      tm_echo["gradient_d_nm"] = gradient_d_nm;
      echo["thickness_model"] = tm_echo;
    }
  }

  if (const json* chain_node = root.opt_child("chain")) {
    Cursor chain(chain_node, "chain", &errors);
    cfg.has_chain = true;
    json stages_echo = json::array();
    if (const json* stages = chain.opt_array("stages")) {
      for (std::size_t i = 0; i < stages->size(); ++i) {
        const std::string key = "stages[" + std::to_string(i) + "]";
        const json& st = (*stages)[i];
        if (!st.is_object()) {
          chain.error(key, "expected an object");
          continue;
        }
        Cursor stage(&st, chain.join(key), &errors);
        const std::string label = stage.req_string("label");
        const double db = stage.req_number("db");
        if (db < 0.0) stage.error("db", "must be >= 0");
        stage.finish();
        cfg.chain.stages.emplace_back(label, db);
        stages_echo.push_back({{"label", label}, {"db", db}});
      }
    }
    cfg.chain.cable_loss = chain.opt_number("cable_loss_db", 0.0);
    if (cfg.chain.cable_loss < 0.0) chain.error("cable_loss_db", "must be >= 0");
    chain.finish();
    echo["chain"] = {{"stages", stages_echo}, {"cable_loss_db", cfg.chain.cable_loss}};
  }

  if (mode_ok && cfg.mode == RunMode::synth) {
    json synth_echo;
    double qi = cfg.synth.q_internal;
    double phi = cfg.synth.phi;
    double noise = cfg.synth.noise_sigma;
    std::int64_t ppr = cfg.synth.points_per_resonator;
    double span = cfg.synth.span_linewidths;
    if (const json* synth_node = root.opt_child("synth")) {
      Cursor synth(synth_node, "synth", &errors);
      qi = positive(synth, "q_internal", synth.opt_number("q_internal", qi));
      phi = synth.opt_number("phi_rad", phi);
      noise = synth.opt_number("noise_sigma", noise);
      if (noise < 0.0) synth.error("noise_sigma", "must be >= 0");
      ppr = synth.opt_int("points_per_resonator", ppr);
      if (ppr < 21) synth.error("points_per_resonator", "must be >= 21");
      span = positive(synth, "span_linewidths", synth.opt_number("span_linewidths", span));
      synth.finish();
    }
    cfg.synth.q_internal = qi;
    cfg.synth.phi = phi;
    cfg.synth.noise_sigma = noise;
    cfg.synth.points_per_resonator = static_cast<int>(ppr);
    cfg.synth.span_linewidths = span;
    echo["synth"] = {{"q_internal", qi},
                     {"phi_rad", phi},
                     {"noise_sigma", noise},
                     {"points_per_resonator", cfg.synth.points_per_resonator},
                     {"span_linewidths", span}};
  } else {
    root.opt_child("synth");
  }

  if (mode_ok && cfg.mode == RunMode::sweep) {
    if (const json* sweep_node = root.req_child("sweep")) {
      Cursor sweep(sweep_node, "sweep", &errors);
      cfg.sweep.variable = sweep.req_string("variable");
      json sweep_echo = {{"variable", cfg.sweep.variable}};
      if (cfg.sweep.variable == "thickness") {
        const auto list = sweep.req_number_list("d_nm_list");
        if (list.empty()) sweep.error("d_nm_list", "must not be empty");
        for (double v : list) {
          if (!(v > 0.0)) sweep.error("d_nm_list", "entries must be > 0");
          cfg.sweep.d_list.push_back(v * 1e-9);
        }
        cfg.sweep.d_list_nm = list;
        sweep_echo["d_nm_list"] = list;
      } else if (cfg.sweep.variable == "geometry") {
        const double footprint_um =
            positive(sweep, "footprint_um", sweep.req_number("footprint_um"));
        cfg.sweep.footprint = footprint_um * 1e-6;
        const auto list = sweep.req_number_list("s_um_list");
        if (list.empty()) sweep.error("s_um_list", "must not be empty");
        for (double v : list) {
          if (!(v > 0.0)) sweep.error("s_um_list", "entries must be > 0");
          cfg.sweep.gap_list.push_back(v * 1e-6);
        }
        cfg.sweep.gap_list_um = list;
        sweep_echo["footprint_um"] = footprint_um;
        sweep_echo["s_um_list"] = list;
      } else {
        sweep.error("variable", "must be 'thickness' or 'geometry'");
      }
      sweep.finish();
      echo["sweep"] = sweep_echo;
    }
  } else {
    root.opt_child("sweep");
  }

  if (mode_ok && cfg.mode == RunMode::fit) {
    json fit_echo;
    std::int64_t n_res = 1;
    json traces_echo = json::array();
    if (const json* fit_node = root.opt_child("fit")) {
      Cursor fit(fit_node, "fit", &errors);
      n_res = fit.opt_int("n_resonators", 1);
      if (n_res < 1) fit.error("n_resonators", "must be >= 1");
      if (const json* arr = fit.opt_array("trace_csv")) {
        for (std::size_t i = 0; i < arr->size(); ++i) {
          const json& v = (*arr)[i];
          if (!v.is_string()) {
            fit.error("trace_csv[" + std::to_string(i) + "]", "expected a string");
            continue;
          }
          fs::path p = v.get<std::string>();
          if (p.is_relative()) p = base_dir / p;
          p = p.lexically_normal();
          cfg.fit.traces.push_back(p);
          traces_echo.push_back(p.string());
        }
      }
      fit.finish();
    }
    cfg.fit.n_resonators = static_cast<int>(n_res);
    fit_echo["n_resonators"] = cfg.fit.n_resonators;
    fit_echo["trace_csv"] = traces_echo;
    echo["fit"] = fit_echo;
  } else {
    root.opt_child("fit");
  }

  if (mode_ok && cfg.mode == RunMode::tls) {
    if (const json* tls_node = root.req_child("tls")) {
      Cursor tls(tls_node, "tls", &errors);
      fs::path p = tls.req_string("sweep_csv");
      if (p.is_relative()) p = base_dir / p;
      cfg.tls.sweep_csv = p.lexically_normal();
      const double f_ghz = positive(tls, "frequency_ghz", tls.req_number("frequency_ghz"));
      cfg.tls.frequency = f_ghz * 1e9;
      const double t_k = positive(tls, "temperature_k", tls.req_number("temperature_k"));
      cfg.tls.temperature = t_k;
      tls.finish();
      echo["tls"] = {{"sweep_csv", cfg.tls.sweep_csv.string()},
                     {"frequency_ghz", f_ghz},
                     {"temperature_k", t_k}};
    }
  } else {
    root.opt_child("tls");
  }

  root.finish();

  if (!errors.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  cfg.echo = std::move(echo);
  return cfg;
}

RunConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config_json(doc, fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------
// Trace CSV
// ---------------------------------------------------------------------------

namespace {

double parse_field(const std::string& field, const fs::path& path, int line, int column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw DataError(path.string() + " line " + std::to_string(line) + ": malformed number in column " +
                    std::to_string(column));
  }
  if (!std::isfinite(value)) {
    throw DataError(path.string() + " line " + std::to_string(line) + ": non-finite value in column " +
                    std::to_string(column));
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

S21Trace read_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  bool has_power = false;
  if (line == "freq_hz,re_s21,im_s21") {
    has_power = false;
  } else if (line == "freq_hz,re_s21,im_s21,power_dbm") {
    has_power = true;
  } else {
    throw DataError(path.string() + " line 1: bad header, expected 'freq_hz,re_s21,im_s21[,power_dbm]'");
  }
  const std::size_t expected_fields = has_power ? 4 : 3;

  S21Trace trace;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected_fields) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(expected_fields) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const double f = parse_field(fields[0], path, line_no, 1);
    const double re = parse_field(fields[1], path, line_no, 2);
    const double im = parse_field(fields[2], path, line_no, 3);
    if (!trace.freq.empty() && !(f > trace.freq.back())) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": frequency must be strictly increasing");
    }
    if (has_power) {
      const double p = parse_field(fields[3], path, line_no, 4);
      if (!trace.power_dbm.has_value()) {
        trace.power_dbm = p;
      } else if (*trace.power_dbm != p) {
        throw DataError(path.string() + " line " + std::to_string(line_no) +
                        ": power_dbm must be constant within a file");
      }
    }
    trace.freq.push_back(f);
    trace.s21.emplace_back(re, im);
  }
  if (trace.freq.empty()) throw DataError(path.string() + ": no data rows");
  return trace;
}

void write_trace(const fs::path& path, const S21Trace& trace) {
  trace.validate();
  std::string out;
  out.reserve(trace.freq.size() * 48 + 64);
  out += trace.power_dbm ? "freq_hz,re_s21,im_s21,power_dbm\n" : "freq_hz,re_s21,im_s21\n";
  for (std::size_t i = 0; i < trace.freq.size(); ++i) {
    out += format_double(trace.freq[i]);
    out += ',';
    out += format_double(trace.s21[i].real());
    out += ',';
    out += format_double(trace.s21[i].imag());
    if (trace.power_dbm) {
      out += ',';
      out += format_double(*trace.power_dbm);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Mode runners
// ---------------------------------------------------------------------------

namespace {

json fit_to_json(const ResonanceFit& f) {
  return json{{"f0_hz", f.f0},
              {"q_loaded", f.q_loaded},
              {"q_coupling", f.q_coupling},
              {"phi_rad", f.phi},
              {"q_internal", f.q_internal},
              {"f0_err_hz", f.f0_err},
              {"q_loaded_err", f.q_loaded_err},
              {"q_coupling_err", f.q_coupling_err},
              {"phi_err_rad", f.phi_err},
              {"q_internal_err", f.q_internal_err},
              {"residual_rms", f.residual_rms}};
}

json run_design(const RunConfig& cfg, const fs::path& out_dir) {
  const ChipDesign& chip = cfg.chip;
  chip.validate();
  const TransmissionLine tl = make_transmission_line(chip.geom, chip.mat);
  const KineticParams kin = kinetic_params(chip.geom, chip.mat);
  const auto targets = chip.target_frequencies();

  json resonators = json::array();
  std::vector<double> predicted_mhz;
  std::vector<double> lengths;
  std::vector<double> f_geo_mhz;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double length = solve_length(targets[i], tl.c_per_len, tl.total_inductance());
    const double f_geo = quarter_wave_frequency(length, tl.c_per_len, tl.lm_per_len);
    const double f_full = quarter_wave_frequency(length, tl.c_per_len, tl.total_inductance());
    lengths.push_back(length);
    f_geo_mhz.push_back(f_geo * 1e-6);
    predicted_mhz.push_back(f_full * 1e-6);
    resonators.push_back({{"index", i},
                          {"f_target_mhz", targets[i] * 1e-6},
                          {"length_um", length * 1e6},
                          {"f_geometric_mhz", f_geo * 1e-6},
                          {"f_full_mhz", f_full * 1e-6},
                          {"delta_f_mhz", (f_full - f_geo) * 1e-6}});
  }
  const LinearFit lf = linear_fit_mse(predicted_mhz);

  std::string csv =
      "index,f_target_mhz,length_um,f_geometric_mhz,f_full_mhz,delta_f_mhz,f_linear_fit_mhz\n";
  for (std::size_t i = 0; i < targets.size(); ++i) {
    csv += std::to_string(i) + ',' + format_double(targets[i] * 1e-6) + ',' +
           format_double(lengths[i] * 1e6) + ',' + format_double(f_geo_mhz[i]) + ',' +
           format_double(predicted_mhz[i]) + ',' +
           format_double(predicted_mhz[i] - f_geo_mhz[i]) + ',' +
           format_double(lf.intercept + lf.slope * static_cast<double>(i)) + '\n';
  }
  write_file_atomic(out_dir / "design.csv", csv);
  return json{{"resonators", resonators},
              {"line", {{"c_per_m", tl.c_per_len},
                        {"lm_per_m", tl.lm_per_len},
                        {"lk_per_m", tl.lk_per_len},
                        {"phase_velocity_m_per_s", tl.phase_velocity()},
                        {"lambda_eff_nm", kin.lambda_eff * 1e9},
                        {"g_factor", kin.g_factor},
                        {"kinetic_fraction", kin.kinetic_fraction},
                        {"valid_thin_film", kin.valid_thin_film}}},
              {"linear_fit",
               {{"slope_mhz_per_index", lf.slope}, {"intercept_mhz", lf.intercept}, {"mse_mhz2", lf.mse}}},
              {"files", {{"design_csv", (out_dir / "design.csv").string()}}}};
}

json mc_summary(const McResult& mc) {
  return json{{"n_trials", mc.n_trials},
              {"seed", mc.seed},
              {"rng", rng_algorithm_id},
              {"mean_mse_mhz2", mc.mean_mse()},
              {"mean_delta_f_mhz", mc.mean_delta_f()}};
}

json run_mc(const RunConfig& cfg, const fs::path& out_dir) {
  const McResult mc =
      run_monte_carlo(cfg.chip, cfg.thickness, cfg.n_trials, cfg.seed, cfg.n_threads);
  std::string csv = "trial,mse_mhz2,delta_f_mhz\n";
  for (int t = 0; t < mc.n_trials; ++t) {
    csv += std::to_string(t) + ',' + format_double(mc.mse_samples[static_cast<std::size_t>(t)]) +
           ',' + format_double(mc.delta_f_samples[static_cast<std::size_t>(t)]) + '\n';
  }
  write_file_atomic(out_dir / "mc_samples.csv", csv);
  json results = mc_summary(mc);
  results["files"] = {{"samples_csv", (out_dir / "mc_samples.csv").string()}};
  return results;
}

json run_sweep(const RunConfig& cfg, const fs::path& out_dir) {
  json points = json::array();
  std::string csv;
  if (cfg.sweep.variable == "thickness") {
    csv = "d_nm,kinetic_fraction,mean_mse_mhz2,mean_delta_f_mhz\n";
    for (std::size_t i = 0; i < cfg.sweep.d_list.size(); ++i) {
      const double d = cfg.sweep.d_list[i];
      ChipDesign chip = cfg.chip;
      chip.geom.thickness = d;
      ThicknessModel tm = cfg.thickness;
      tm.d_nominal = d;
      if (cfg.sweep.sigma_is_default) tm.sigma_d = 0.02 * d;
      const McResult mc = run_monte_carlo(chip, tm, cfg.n_trials, cfg.seed, cfg.n_threads);
      const double frac = kinetic_fraction(chip.geom, chip.mat);
      csv += format_double(cfg.sweep.d_list_nm[i]) + ',' + format_double(frac) + ',' +
             format_double(mc.mean_mse()) + ',' + format_double(mc.mean_delta_f()) + '\n';
      points.push_back({{"d_nm", cfg.sweep.d_list_nm[i]},
                        {"kinetic_fraction", frac},
                        {"mean_mse_mhz2", mc.mean_mse()},
                        {"mean_delta_f_mhz", mc.mean_delta_f()}});
    }
  } else {
    csv = "s_um,w_um,kinetic_fraction,mean_mse_mhz2,mean_delta_f_mhz\n";
    for (std::size_t i = 0; i < cfg.sweep.gap_list.size(); ++i) {
      const double s = cfg.sweep.gap_list[i];
      const double w = cfg.sweep.footprint - 2.0 * s;
      ChipDesign chip = cfg.chip;
      chip.geom.gap = s;
      chip.geom.width = w;
      if (!(w > chip.geom.thickness)) {
        throw ConfigError("sweep.s_um_list: gap " + format_double(s * 1e6) +
                          " um leaves no room for the center conductor");
      }
      const McResult mc =
          run_monte_carlo(chip, cfg.thickness, cfg.n_trials, cfg.seed, cfg.n_threads);
      const double frac = kinetic_fraction(chip.geom, chip.mat);
      csv += format_double(cfg.sweep.gap_list_um[i]) + ',' + format_double(w * 1e6) + ',' +
             format_double(frac) + ',' + format_double(mc.mean_mse()) + ',' +
             format_double(mc.mean_delta_f()) + '\n';
      points.push_back({{"s_um", cfg.sweep.gap_list_um[i]},
                        {"w_um", w * 1e6},
                        {"kinetic_fraction", frac},
                        {"mean_mse_mhz2", mc.mean_mse()},
                        {"mean_delta_f_mhz", mc.mean_delta_f()}});
    }
  }
  write_file_atomic(out_dir / "sweep.csv", csv);
  return json{{"variable", cfg.sweep.variable},
              {"points", points},
              {"rng", rng_algorithm_id},
              {"files", {{"sweep_csv", (out_dir / "sweep.csv").string()}}}};
}

json run_synth(const RunConfig& cfg, const fs::path& out_dir) {
  const ChipDesign& chip = cfg.chip;
  chip.validate();
  const auto targets = chip.target_frequencies();

  std::vector<NotchParams> notches;
  std::vector<double> grid;
  for (double f0 : targets) {
    NotchParams p{f0, cfg.synth.q_internal, chip.q_c_nominal, cfg.synth.phi};
    notches.push_back(p);
    const double fwhm = f0 / loaded_q(p.q_internal, p.q_coupling, p.phi);
    const double half = 0.5 * cfg.synth.span_linewidths * fwhm;
    const int npts = cfg.synth.points_per_resonator;
    for (int i = 0; i < npts; ++i) {
      grid.push_back(f0 - half + (2.0 * half) * i / (npts - 1));
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const SynthResult synth = synthesize_s21(notches, grid, cfg.synth.noise_sigma, cfg.seed);
  S21Trace trace;
  trace.freq = std::move(grid);
  trace.s21 = synth.s21;
  const fs::path trace_path = out_dir / "synthetic_trace.csv";
  write_trace(trace_path, trace);

  json params = json::array();
  for (const auto& p : notches) {
    params.push_back({{"f0_hz", p.f0},
                      {"q_internal", p.q_internal},
                      {"q_coupling", p.q_coupling},
                      {"phi_rad", p.phi}});
  }
  return json{{"n_points", trace.freq.size()},
              {"overlap_warning", synth.overlap_warning},
              {"resonators", params},
              {"rng", rng_algorithm_id},
              {"files", {{"trace_csv", trace_path.string()}}}};
}

// Splits a multi-resonance trace at midpoints between the n deepest dips.
std::vector<S21Trace> split_resonances(const S21Trace& trace, int expected,
                                       const fs::path& origin) {
  if (expected <= 1) return {trace};
  const std::size_t n = trace.freq.size();
  std::vector<double> amp(n);
  for (std::size_t i = 0; i < n; ++i) amp[i] = std::abs(trace.s21[i]);
  std::vector<double> sorted_amp = amp;
  std::nth_element(sorted_amp.begin(), sorted_amp.begin() + static_cast<long>(n / 2),
                   sorted_amp.end());
  const double baseline = sorted_amp[n / 2];

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (amp[i] <= amp[i - 1] && amp[i] <= amp[i + 1] && amp[i] < 0.9 * baseline) {
      candidates.push_back(i);
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](std::size_t a, std::size_t b) { return amp[a] < amp[b]; });

  const double span = trace.freq.back() - trace.freq.front();
  const double min_sep = span / (4.0 * expected);
  std::vector<std::size_t> dips;
  for (std::size_t c : candidates) {
    bool clear = true;
    for (std::size_t d : dips) {
      if (std::abs(trace.freq[c] - trace.freq[d]) < min_sep) {
        clear = false;
        break;
      }
    }
    if (clear) dips.push_back(c);
    if (static_cast<int>(dips.size()) == expected) break;
  }
  if (static_cast<int>(dips.size()) != expected) {
    throw DataError(origin.string() + ": expected " + std::to_string(expected) +
                    " resonances, found " + std::to_string(dips.size()));
  }
  std::sort(dips.begin(), dips.end());

  std::vector<S21Trace> out;
  std::size_t begin = 0;
  for (std::size_t k = 0; k < dips.size(); ++k) {
    std::size_t end = n;
    if (k + 1 < dips.size()) {
      const double mid = 0.5 * (trace.freq[dips[k]] + trace.freq[dips[k + 1]]);
      end = static_cast<std::size_t>(
          std::lower_bound(trace.freq.begin(), trace.freq.end(), mid) - trace.freq.begin());
    }
    S21Trace seg;
    seg.power_dbm = trace.power_dbm;
    seg.freq.assign(trace.freq.begin() + static_cast<long>(begin),
                    trace.freq.begin() + static_cast<long>(end));
    seg.s21.assign(trace.s21.begin() + static_cast<long>(begin),
                   trace.s21.begin() + static_cast<long>(end));
    out.push_back(std::move(seg));
    begin = end;
  }
  return out;
}

json run_fit(const RunConfig& cfg, const fs::path& out_dir) {
  if (cfg.fit.traces.empty()) {
    throw ConfigError("fit.trace_csv: no trace files given (config key or --trace)");
  }
  const bool with_photons = cfg.has_chain;

  std::string csv = "file,resonator,f0_hz,q_loaded,q_coupling,phi_rad,q_internal,"
                    "f0_err_hz,q_loaded_err,q_coupling_err,phi_err_rad,q_internal_err,"
                    "residual_rms";
  if (with_photons) csv += ",power_at_chip_dbm,n_photon";
  csv += '\n';

  json all = json::array();
  for (const auto& path : cfg.fit.traces) {
    const S21Trace trace = read_trace(path);
    const auto segments = split_resonances(trace, cfg.fit.n_resonators, path);
    for (std::size_t k = 0; k < segments.size(); ++k) {
      const ResonanceFit fit = fit_resonance(segments[k]);
      json row = fit_to_json(fit);
      row["file"] = path.string();
      row["resonator"] = k;
      csv += path.filename().string() + ',' + std::to_string(k) + ',' + format_double(fit.f0) +
             ',' + format_double(fit.q_loaded) + ',' + format_double(fit.q_coupling) + ',' +
             format_double(fit.phi) + ',' + format_double(fit.q_internal) + ',' +
             format_double(fit.f0_err) + ',' + format_double(fit.q_loaded_err) + ',' +
             format_double(fit.q_coupling_err) + ',' + format_double(fit.phi_err) + ',' +
             format_double(fit.q_internal_err) + ',' + format_double(fit.residual_rms);
      if (with_photons) {
        if (trace.power_dbm) {
          const double p_chip = power_at_chip(*trace.power_dbm, cfg.chain);
          const double n_ph = photon_number(p_chip, fit.f0, fit.q_loaded, fit.q_coupling);
          row["power_at_chip_dbm"] = p_chip;
          row["n_photon"] = n_ph;
          csv += ',' + format_double(p_chip) + ',' + format_double(n_ph);
        } else {
          csv += ",,";
        }
      }
      csv += '\n';
      all.push_back(std::move(row));
    }
  }
  write_file_atomic(out_dir / "fits.csv", csv);
  return json{{"fits", all}, {"files", {{"fits_csv", (out_dir / "fits.csv").string()}}}};
}

std::vector<TlsPoint> read_tls_sweep(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sweep file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "n_photon,qi,sigma_qi") {
    throw DataError(path.string() + " line 1: bad header, expected 'n_photon,qi,sigma_qi'");
  }
  std::vector<TlsPoint> points;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": expected 3 fields");
    }
    TlsPoint p;
    p.n_photon = parse_field(fields[0], path, line_no, 1);
    p.q_internal = parse_field(fields[1], path, line_no, 2);
    p.sigma_qi = parse_field(fields[2], path, line_no, 3);
    points.push_back(p);
  }
  if (points.empty()) throw DataError(path.string() + ": no data rows");
  return points;
}

json run_tls(const RunConfig& cfg, const fs::path& out_dir) {
  const auto sweep = read_tls_sweep(cfg.tls.sweep_csv);
  const TlsFit fit = fit_tls(sweep, cfg.tls.temperature, cfg.tls.frequency);

  // Fitted curve on a log grid across the measured range, for plotting.
  double n_min = sweep.front().n_photon;
  double n_max = sweep.front().n_photon;
  for (const auto& p : sweep) {
    n_min = std::min(n_min, p.n_photon);
    n_max = std::max(n_max, p.n_photon);
  }
  std::string csv = "n_photon,qi_model\n";
  const int n_curve = 200;
  for (int i = 0; i < n_curve; ++i) {
    const double lg =
        std::log10(n_min) + (std::log10(n_max) - std::log10(n_min)) * i / (n_curve - 1);
    const double n = std::pow(10.0, lg);
    csv += format_double(n) + ',' +
           format_double(tls_qi_model(n, fit.f_delta0, fit.n_c, fit.q_others, fit.temperature,
                                      fit.frequency)) +
           '\n';
  }
  write_file_atomic(out_dir / "tls_curve.csv", csv);

  // Measured points next to the model, one row per sweep point.
  std::string data_csv = "n_photon,qi,sigma_qi,qi_model\n";
  for (const auto& pt : sweep) {
    data_csv += format_double(pt.n_photon) + ',' + format_double(pt.q_internal) + ',' +
                format_double(pt.sigma_qi) + ',' +
                format_double(tls_qi_model(pt.n_photon, fit.f_delta0, fit.n_c, fit.q_others,
                                           fit.temperature, fit.frequency)) +
                '\n';
  }
  write_file_atomic(out_dir / "tls_fit.csv", data_csv);

  return json{
      {"f_delta0", fit.f_delta0},
      {"n_c", fit.n_c},
      {"q_others", fit.q_others},
      {"f_delta0_err", fit.f_delta0_err},
      {"n_c_err", fit.n_c_err},
      {"q_others_err", fit.q_others_err},
      {"residual_rms", fit.residual_rms},
      {"degenerate", fit.degenerate},
      {"qi_at_single_photon",
       tls_qi_model(1.0, fit.f_delta0, fit.n_c, fit.q_others, fit.temperature, fit.frequency)},
      {"n_points", sweep.size()},
      {"files",
       {{"curve_csv", (out_dir / "tls_curve.csv").string()},
        {"fit_csv", (out_dir / "tls_fit.csv").string()}}}};
}

json si_view(const RunConfig& cfg) {
  json si;
  if (cfg.chip.n_resonators > 0) {
    si["chip"] = {{"f_mean_hz", cfg.chip.f_mean},
                  {"f_gap_hz", cfg.chip.f_gap},
                  {"geom",
                   {{"w_m", cfg.chip.geom.width},
                    {"s_m", cfg.chip.geom.gap},
                    {"d_m", cfg.chip.geom.thickness}}}};
    si["material"] = {{"lambda0_m", cfg.chip.mat.lambda0},
                      {"eps_r", cfg.chip.mat.eps_r},
                      {"temperature_k", cfg.chip.mat.temperature}};
    si["thickness_model"] = {{"d_nominal_m", cfg.thickness.d_nominal},
                             {"sigma_d_m", cfg.thickness.sigma_d},
                             {"gradient_d_m", cfg.thickness.gradient_d}};
  }
  return si;
}

}  // namespace

json run(const RunConfig& cfg) {
  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);

  json results;
  switch (cfg.mode) {
    case RunMode::design: results = run_design(cfg, out_dir); break;
    case RunMode::sweep: results = run_sweep(cfg, out_dir); break;
    case RunMode::mc: results = run_mc(cfg, out_dir); break;
    case RunMode::synth: results = run_synth(cfg, out_dir); break;
    case RunMode::fit: results = run_fit(cfg, out_dir); break;
    case RunMode::tls: results = run_tls(cfg, out_dir); break;
  }

  json report;
  report["tool"] = {{"name", tool_name},
                    {"version", tool_version},
                    {"config_schema", config_schema_version},
                    {"trace_format", trace_format_version},
                    {"report_format", report_format_version},
                    {"rng", rng_algorithm_id}};
  report["config_echo"] = cfg.echo;
  report["config_si"] = si_view(cfg);
  report["provenance"] = {
      {"mode", to_string(cfg.mode)}, {"seed", cfg.seed}, {"timestamp_utc", utc_now_iso()}};
  report["results"] = results;
  write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace scpw
