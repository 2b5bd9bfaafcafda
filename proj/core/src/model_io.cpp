#include "alarmhmm/model_io.hpp"

#include <fstream>
#include <sstream>

#include "alarmhmm/errors.hpp"

namespace alarmhmm {

namespace {

using nlohmann::json;

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw SchemaError(std::string("model document is missing field '") + key + "'");
  }
  return doc.at(key);
}

std::size_t require_count(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_number_unsigned()) {
    throw SchemaError(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> read_vector(const json& v, const std::string& what, std::size_t expected) {
  if (!v.is_array() || v.size() != expected) {
    throw SchemaError(what + " must be an array of " + std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const json& x : v) {
    if (!x.is_number()) throw SchemaError(what + " contains a non-numeric entry");
    out.push_back(x.get<double>());
  }
  return out;
}

Matrix read_matrix(const json& v, const std::string& what, std::size_t rows, std::size_t cols) {
  if (!v.is_array() || v.size() != rows) {
    throw SchemaError(what + " must have " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = read_vector(v[i], what + " row " + std::to_string(i), cols);
    std::copy(row.begin(), row.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace

json hmm_to_json(const Hmm& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["n_states"] = model.n_states();
  doc["n_symbols"] = model.n_symbols();
  doc["transition"] = model.transition().to_rows();
  doc["emission"] = model.emission().to_rows();
  doc["initial"] = model.initial();
  return doc;
}

Hmm hmm_from_json(const json& doc) {
  const json& version = require(doc, "format_version");
  if (!version.is_string() || version.get<std::string>() != kModelFormatVersion) {
    throw SchemaError("unsupported model format_version");
  }
  const std::size_t n = require_count(doc, "n_states");
  const std::size_t m = require_count(doc, "n_symbols");
  if (n == 0 || m == 0) throw SchemaError("model dimensions must be positive");
  Matrix transition = read_matrix(require(doc, "transition"), "transition", n, n);
  Matrix emission = read_matrix(require(doc, "emission"), "emission", n, m);
  std::vector<double> initial = read_vector(require(doc, "initial"), "initial", n);
  try {
    return Hmm(std::move(transition), std::move(emission), std::move(initial));
  } catch (const DomainError& e) {
    throw InvalidModelError(e.what());
  }
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace alarmhmm
