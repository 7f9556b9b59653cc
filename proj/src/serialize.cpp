#include "ncve/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace ncve {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_complex(Complex z) {
  std::string s = fmt17(z.real());
  s += std::signbit(z.imag()) ? " - " : " + ";
  s += fmt17(std::abs(z.imag()));
  s += "i";
  return s;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void require_schema1(const Json& cfg) {
  if (!cfg.is_object() || !cfg.contains("schema"))
    throw ConfigError("config is missing the schema field");
  const auto& s = cfg["schema"];
  if (!s.is_number_integer() || s.get<long long>() != 1)
    throw ConfigError("unsupported schema; this build reads schema 1");
}

double num_field(const Json& j, const std::string& key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(ctx + " is missing field '" + key + "'");
  const auto& v = j[key];
  if (!v.is_number()) throw ConfigError(ctx + "." + key + " must be a number");
  return v.get<double>();
}

int int_field(const Json& j, const std::string& key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(ctx + " is missing field '" + key + "'");
  const auto& v = j[key];
  if (!v.is_number_integer())
    throw ConfigError(ctx + "." + key + " must be an integer");
  return v.get<int>();
}

ModalSystem modal_system_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("modes") || !j["modes"].is_array())
    throw ConfigError("system.modes must be an array");
  ModalSystem sys;
  int k = 0;
  for (const auto& m : j["modes"]) {
    const std::string ctx = "system.modes[" + std::to_string(k) + "]";
    Mode mode;
    mode.eigenvalue = {num_field(m, "re", ctx), num_field(m, "im", ctx)};
    mode.coeff = {num_field(m, "coeff_re", ctx), num_field(m, "coeff_im", ctx)};
    if (m.contains("label")) {
      if (!m["label"].is_string())
        throw ConfigError(ctx + ".label must be a string");
      mode.label = m["label"].get<std::string>();
    } else {
      mode.label = "m" + std::to_string(k + 1);
    }
    sys.modes.push_back(mode);
    ++k;
  }
  if (j.contains("omega")) {
    if (!j["omega"].is_number())
      throw ConfigError("system.omega must be a number");
    sys.omega = j["omega"].get<double>();
  }
  if (j.contains("jordan_blocks")) {
    if (!j["jordan_blocks"].is_array())
      throw ConfigError("system.jordan_blocks must be an array");
    int c = 0;
    for (const auto& b : j["jordan_blocks"]) {
      const std::string ctx = "system.jordan_blocks[" + std::to_string(c) + "]";
      JordanChain chain;
      chain.eigenvalue = {num_field(b, "re", ctx), num_field(b, "im", ctx)};
      chain.length = int_field(b, "length", ctx);
      sys.jordan_blocks.push_back(chain);
      ++c;
    }
  }
  return sys;
}

StateVector complex_vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array");
  StateVector v(Eigen::Index(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) {
    if (e.is_number()) {
      v[i] = Complex(e.get<double>(), 0.0);
    } else if (e.is_object()) {
      v[i] = Complex(num_field(e, "re", what), num_field(e, "im", what));
    } else {
      throw ConfigError(what + " entries must be numbers or {re, im} objects");
    }
    ++i;
  }
  return v;
}

std::vector<double> double_list_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(what + " entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
  if (!out) throw std::runtime_error("short write on " + path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string body;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) body += ',';
    body += header[i];
  }
  body += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) body += ',';
      body += fmt17(row[i]);
    }
    body += '\n';
  }
  write_text_file(path, body);
}

}  // namespace ncve
