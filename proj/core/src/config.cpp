#include "sandi/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sandi {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_i64(const std::string& s, std::int64_t& out) {
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

bool parse_f64(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

Result<ServiceConfig> parse_config(const std::string& text) {
  ServiceConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool sc_init_set = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      return Error{Status::malformed,
                   "config line " + std::to_string(lineno) + ": missing '='"};
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      return Error{Status::malformed,
                   "config line " + std::to_string(lineno) + ": empty field"};
    }

    std::int64_t i = 0;
    double f = 0.0;
    auto want_i64 = [&]() -> bool { return parse_i64(value, i); };
    auto want_f64 = [&]() -> bool { return parse_f64(value, f); };

    if (key == "epoch_dur" && want_i64()) {
      cfg.as.epoch_dur = i;
    } else if (key == "E" && want_i64()) {
      cfg.as.expiry_epochs = static_cast<int>(i);
    } else if (key == "val_period" && want_i64()) {
      cfg.as.val_period = i;
    } else if (key == "report_lock" && want_i64()) {
      cfg.as.report_lock = i;
    } else if (key == "B_vk" && want_i64()) {
      cfg.as.max_keys = static_cast<int>(i);
      cfg.as.noise.sensitivity = static_cast<int>(i);
    } else if (key == "k" && want_i64()) {
      cfg.as.score.tolerance = static_cast<int>(i);
    } else if (key == "M" && want_i64()) {
      cfg.as.score.cap = static_cast<int>(i);
      cfg.as.thresholds = default_thresholds(cfg.as.score);
      if (!sc_init_set) {
        cfg.as.sc_init = static_cast<double>(i);
      }
    } else if (key == "b" && want_f64()) {
      cfg.as.score.recovery = f;
    } else if (key == "mu" && want_f64()) {
      cfg.as.noise.mu = f;
    } else if (key == "sigma" && want_f64()) {
      cfg.as.noise.noise_std = f;
    } else if (key == "sc_init" && want_f64()) {
      cfg.as.sc_init = f;
      sc_init_set = true;
    } else if (key == "oblivious_noise" && want_i64()) {
      cfg.as.oblivious_noise = i != 0;
    } else if (key == "bind") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) {
        return Error{Status::malformed, "bind must be host:port"};
      }
      cfg.bind_host = value.substr(0, colon);
      std::int64_t port;
      if (!parse_i64(value.substr(colon + 1), port) || port < 1 ||
          port > 65535) {
        return Error{Status::malformed, "invalid bind port"};
      }
      cfg.bind_port = static_cast<int>(port);
    } else if (key == "persist") {
      cfg.as.persist_path = value;
    } else {
      return Error{Status::malformed,
                   "config line " + std::to_string(lineno) +
                       ": unknown key or bad value '" + key + "'"};
    }
  }

  if (!cfg.as.valid()) {
    return Error{Status::invalid_parameter,
                 "configuration violates parameter constraints"};
  }
  return cfg;
}

Result<ServiceConfig> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return Error{Status::invalid_parameter, "cannot open config: " + path};
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace sandi
