#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "ncve/modal.hpp"

namespace ncve {

using Json = nlohmann::json;

// A config file this build cannot act on. The message names the field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal text that round-trips a double. snprintf with %.17g in the
// C numeric locale; the program never calls setlocale, so '.' stays '.'.
std::string fmt17(double x);

// "re + imi" rendering for report text, both parts through fmt17.
std::string fmt_complex(Complex z);

Json load_json_file(const std::string& path);

// Every config carries `schema: 1`; reject anything else up front.
void require_schema1(const Json& cfg);

double num_field(const Json& j, const std::string& key, const std::string& ctx);
int int_field(const Json& j, const std::string& key, const std::string& ctx);

// {modes: [{re, im, coeff_re, coeff_im, label?}], omega?, jordan_blocks?:
//  [{re, im, length}]}. Labels default to m1, m2, ...
ModalSystem modal_system_from_json(const Json& j);

// Array of plain numbers or {re, im} objects.
StateVector complex_vector_from_json(const Json& j, const std::string& what);

std::vector<double> double_list_from_json(const Json& j, const std::string& what);

void write_text_file(const std::string& path, const std::string& body);

// All cells go through fmt17, rows end with '\n', no trailing comma. Opened
// in binary mode so reruns byte-match.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace ncve
