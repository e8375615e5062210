#include "qbridge/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "qbridge/errors.hpp"

namespace qbridge {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string_view rest = value;
  while (true) {
    const auto comma = rest.find(',');
    items.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return items;
}

double to_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw InvalidInput("not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  int v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw InvalidInput("not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw InvalidInput("not a boolean: '" + s + "'");
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item));
  return out;
}

template <size_t N, class T, class F>
std::array<T, N> to_array(const std::string& s, F convert) {
  const auto items = split_list(s);
  if (items.size() != N) {
    throw InvalidInput("expected " + std::to_string(N) + " values, got " +
                       std::to_string(items.size()));
  }
  std::array<T, N> out{};
  for (size_t i = 0; i < N; ++i) out[i] = convert(items[i]);
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s;
}

template <size_t N, class T>
std::string join(const std::array<T, N>& v) {
  std::string s;
  for (size_t i = 0; i < N; ++i) {
    if (i) s += ", ";
    if constexpr (std::is_same_v<T, int>) {
      s += std::to_string(v[i]);
    } else {
      s += format_number(v[i]);
    }
  }
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"device",
       {
           {"freqs", [](auto& c, const auto& v) { c.device.freqs = to_array<kNumModes, double>(v, to_double); }},
           {"anharmonicity", [](auto& c, const auto& v) { c.device.anharmonicity = to_double(v); }},
           {"g_ref_mhz", [](auto& c, const auto& v) { c.device.g_ref_mhz = to_doubles(v); }},
           {"nu_ref", [](auto& c, const auto& v) { c.device.nu_ref = to_double(v); }},
           {"dims", [](auto& c, const auto& v) { c.device.dims = to_array<kNumModes, int>(v, to_int); }},
           {"scaling", [](auto& c, const auto& v) { c.device.scaling = parse_coupling_scaling(v); }},
       }},
      {"pulse",
       {
           {"shape", [](auto& c, const auto& v) { c.pulse.shape = parse_pulse_shape(v); }},
           {"ramp_frac", [](auto& c, const auto& v) { c.pulse.ramp_frac = to_double(v); }},
           {"idle",
            [](auto& c, const auto& v) {
              c.pulse.idle_auto = (v == "auto");
              if (!c.pulse.idle_auto) c.pulse.idle = to_double(v);
            }},
           {"gate_times", [](auto& c, const auto& v) { c.pulse.gate_times = to_doubles(v); }},
           {"fourier_coeffs", [](auto& c, const auto& v) { c.pulse.fourier_coeffs = to_doubles(v); }},
           {"optimize_coefficients",
            [](auto& c, const auto& v) { c.pulse.optimize_coefficients = to_bool(v); }},
       }},
      {"noise",
       {
           {"q_factors", [](auto& c, const auto& v) { c.noise.q_factors = to_doubles(v); }},
           {"gate_time", [](auto& c, const auto& v) { c.noise.gate_time = to_double(v); }},
           {"g_mhz", [](auto& c, const auto& v) { c.noise.g_mhz = to_double(v); }},
       }},
      {"solver",
       {
           {"dt", [](auto& c, const auto& v) { c.solver.dt = to_double(v); }},
           {"eig_tol", [](auto& c, const auto& v) { c.solver.eig_tol = to_double(v); }},
           {"check_convergence", [](auto& c, const auto& v) { c.solver.check_convergence = to_bool(v); }},
       }},
      {"sweep",
       {
           {"bracket",
            [](auto& c, const auto& v) {
              const auto b = to_array<2, double>(v, to_double);
              c.sweep.lo = b[0];
              c.sweep.hi = b[1];
            }},
           {"points", [](auto& c, const auto& v) { c.sweep.points = to_int(v); }},
           {"idle_bracket",
            [](auto& c, const auto& v) {
              const auto b = to_array<2, double>(v, to_double);
              c.sweep.idle_lo = b[0];
              c.sweep.idle_hi = b[1];
            }},
           {"idle_tol_khz", [](auto& c, const auto& v) { c.sweep.idle_tol_khz = to_double(v); }},
       }},
      {"output",
       {
           {"path", [](auto& c, const auto& v) { c.output = v; }},
       }},
  };
  return table;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::array<int, kNumModes> parse_dims(const std::string& text) {
  try {
    return to_array<kNumModes, int>(text, to_int);
  } catch (const InvalidInput& e) {
    throw ConfigurationError(std::string("dims: ") + e.what());
  }
}

void ExperimentConfig::validate() const {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  for (double f : device.freqs) check(f > 0.0 && std::isfinite(f), "device.freqs: frequencies must be positive");
  check(device.anharmonicity < 0.0, "device.anharmonicity: must be negative");
  check(!device.g_ref_mhz.empty(), "device.g_ref_mhz: list must be nonempty");
  for (double g : device.g_ref_mhz) check(g >= 0.0 && std::isfinite(g), "device.g_ref_mhz: values must be >= 0");
  check(device.nu_ref > 0.0 && std::isfinite(device.nu_ref), "device.nu_ref: must be positive");
  for (int d : device.dims) check(d >= 3, "device.dims: every mode needs at least 3 levels");
  check(pulse.ramp_frac >= 0.0 && pulse.ramp_frac <= 0.5, "pulse.ramp_frac: must lie in [0, 0.5]");
  check(pulse.idle_auto || (pulse.idle > 0.0 && std::isfinite(pulse.idle)), "pulse.idle: must be positive or 'auto'");
  check(!pulse.gate_times.empty(), "pulse.gate_times: list must be nonempty");
  for (double t : pulse.gate_times) check(t > 0.0 && std::isfinite(t), "pulse.gate_times: values must be positive");
  check(!pulse.fourier_coeffs.empty(), "pulse.fourier_coeffs: list must be nonempty");
  check(!noise.q_factors.empty(), "noise.q_factors: list must be nonempty");
  for (double q : noise.q_factors) check(q > 0.0, "noise.q_factors: values must be > 0 or inf");
  check(noise.gate_time > 0.0 && std::isfinite(noise.gate_time), "noise.gate_time: must be positive");
  check(noise.g_mhz >= 0.0 && std::isfinite(noise.g_mhz), "noise.g_mhz: must be >= 0");
  check(solver.dt > 0.0 && std::isfinite(solver.dt), "solver.dt: must be positive");
  check(solver.eig_tol > 0.0, "solver.eig_tol: must be positive");
  check(sweep.lo > 0.0 && sweep.hi > sweep.lo, "sweep.bracket: must satisfy 0 < lo < hi");
  check(sweep.points >= 2, "sweep.points: at least 2");
  check(sweep.idle_lo > 0.0 && sweep.idle_hi > sweep.idle_lo, "sweep.idle_bracket: must satisfy 0 < lo < hi");
  check(sweep.idle_tol_khz > 0.0, "sweep.idle_tol_khz: must be positive");
  check(!output.empty(), "output.path: must be nonempty");
  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigurationError(msg);
  }
}

ChainConfig ExperimentConfig::chain(double g_mhz) const {
  ChainConfig c;
  for (int m = 0; m < kNumModes; ++m) {
    const bool qubit = m % 2 == 0;
    c.modes[m] = qubit ? ModeSpec::transmon(device.freqs[m], device.anharmonicity, device.dims[m])
                       : ModeSpec::resonator(device.freqs[m], device.dims[m]);
  }
  c.g_ref = g_mhz * 1e-3;
  c.nu_ref = device.nu_ref;
  c.scaling = device.scaling;
  c.validate();
  return c;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out << "[device]\n"
      << "freqs = " << join(device.freqs) << "\n"
      << "anharmonicity = " << format_number(device.anharmonicity) << "\n"
      << "g_ref_mhz = " << join(device.g_ref_mhz) << "\n"
      << "nu_ref = " << format_number(device.nu_ref) << "\n"
      << "dims = " << join(device.dims) << "\n"
      << "scaling = " << to_string(device.scaling) << "\n"
      << "[pulse]\n"
      << "shape = " << to_string(pulse.shape) << "\n"
      << "ramp_frac = " << format_number(pulse.ramp_frac) << "\n"
      << "idle = " << (pulse.idle_auto ? std::string("auto") : format_number(pulse.idle)) << "\n"
      << "gate_times = " << join(pulse.gate_times) << "\n"
      << "fourier_coeffs = " << join(pulse.fourier_coeffs) << "\n"
      << "optimize_coefficients = " << (pulse.optimize_coefficients ? "true" : "false") << "\n"
      << "[noise]\n"
      << "q_factors = " << join(noise.q_factors) << "\n"
      << "gate_time = " << format_number(noise.gate_time) << "\n"
      << "g_mhz = " << format_number(noise.g_mhz) << "\n"
      << "[solver]\n"
      << "dt = " << format_number(solver.dt) << "\n"
      << "eig_tol = " << format_number(solver.eig_tol) << "\n"
      << "check_convergence = " << (solver.check_convergence ? "true" : "false") << "\n"
      << "[sweep]\n"
      << "bracket = " << format_number(sweep.lo) << ", " << format_number(sweep.hi) << "\n"
      << "points = " << sweep.points << "\n"
      << "idle_bracket = " << format_number(sweep.idle_lo) << ", " << format_number(sweep.idle_hi) << "\n"
      << "idle_tol_khz = " << format_number(sweep.idle_tol_khz) << "\n"
      << "[output]\n"
      << "path = " << output << "\n";
  return out.str();
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::vector<std::string> bad;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    const std::string line = trim(std::string_view(raw).substr(0, comment));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        bad.push_back(where + "malformed section header");
        continue;
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!setters().count(section)) bad.push_back(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bad.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::string name = section + "." + key;
    const auto sec = setters().find(section);
    if (sec == setters().end()) {
      if (section.empty()) bad.push_back(where + "key '" + key + "' outside any section");
      continue;
    }
    const auto setter = sec->second.find(key);
    if (setter == sec->second.end()) {
      bad.push_back(where + "unknown key " + name);
      continue;
    }
    try {
      setter->second(config, value);
    } catch (const Error& e) {
      bad.push_back(name + ": " + e.what());
    }
  }
  try {
    config.validate();
  } catch (const ConfigurationError& e) {
    std::istringstream lines(e.what());
    std::string l;
    std::getline(lines, l);  // header line
    while (std::getline(lines, l)) bad.push_back(trim(l));
  }
  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigurationError(msg);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace qbridge
