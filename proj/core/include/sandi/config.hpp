#pragma once

#include <string>

#include "sandi/server.hpp"

namespace sandi {

/// Service configuration: the AS parameters plus where to listen.
struct ServiceConfig {
  AsConfig as;
  std::string bind_host = "127.0.0.1";
  int bind_port = 8080;
};

/// Parses the textual key/value config format:
///
///   epoch_dur = 86400
///   E = 2
///   val_period = 86400
///   report_lock = 172800
///   B_vk = 1
///   k = 2
///   M = 100
///   b = 0.5
///   mu = -8
///   sigma = 1.1
///   sc_init = 100
///   bind = 127.0.0.1:8080
///   persist = /var/lib/sandi/state.log
///
/// '#' starts a comment; unknown keys are errors. Missing keys keep their
/// defaults.
Result<ServiceConfig> parse_config(const std::string& text);

Result<ServiceConfig> load_config_file(const std::string& path);

}  // namespace sandi
