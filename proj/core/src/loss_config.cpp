#include "docparse/loss_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "docparse/errors.hpp"

namespace docparse {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace

CoordSpec LossConfig::coord_spec() const {
  if (!range_start || !range_end) throw ConfigError("range_start and range_end must both be set");
  return {*range_end - *range_start + 1, *range_start, *range_end};
}

void LossConfig::set(const std::string& key, const std::string& value) {
  if (key == "kernel_size") kernel_size = to_int(key, value);
  else if (key == "sigma") sigma = to_double(key, value);
  else if (key == "normalized") normalized = to_bool(key, value);
  else if (key == "epsilon") epsilon = to_double(key, value);
  else if (key == "range_start") range_start = to_int(key, value);
  else if (key == "range_end") range_end = to_int(key, value);
  else if (key == "softargmax_temperature") softargmax_temperature = to_double(key, value);
  else if (key == "softargmax_weight") softargmax_weight = to_double(key, value);
  else if (key.rfind("weight.", 0) == 0 && key.size() > 7) task_weights[key.substr(7)] = to_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string LossConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "kernel_size = " << kernel_size << '\n'
      << "sigma = " << sigma << '\n'
      << "normalized = " << (normalized ? "true" : "false") << '\n'
      << "epsilon = " << epsilon << '\n';
  if (range_start) out << "range_start = " << *range_start << '\n';
  if (range_end) out << "range_end = " << *range_end << '\n';
  out << "softargmax_temperature = " << softargmax_temperature << '\n'
      << "softargmax_weight = " << softargmax_weight << '\n';
  for (const auto& [task, w] : task_weights) out << "weight." << task << " = " << w << '\n';
  return out.str();
}

LossConfig parse_loss_config(std::istream& in) {
  LossConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

LossConfig load_loss_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open loss config '" + path + "'");
  return parse_loss_config(in);
}

}  // namespace docparse
