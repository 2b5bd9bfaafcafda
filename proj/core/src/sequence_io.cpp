#include "alarmhmm/sequence_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "alarmhmm/errors.hpp"

namespace alarmhmm {

using nlohmann::json;

json record_to_json(const SequenceRecord& record) {
  json line;
  const auto& seq = record.sequence;
  line["fault"] = seq.fault ? json(*seq.fault) : json(nullptr);
  line["format_version"] = kSequenceFormatVersion;
  line["symbols"] = seq.symbols;
  line["times"] = seq.activation_times;
  line["meta"] = record.meta.is_null() ? json::object() : record.meta;
  return line;
}

SequenceRecord record_from_json(const json& line) {
  if (!line.is_object()) throw SchemaError("sequence record must be a JSON object");
  for (const char* key : {"symbols", "times"}) {
    if (!line.contains(key) || !line.at(key).is_array()) {
      throw SchemaError(std::string("sequence record needs an array field '") + key + "'");
    }
  }
  if (line.contains("format_version") && line.at("format_version") != kSequenceFormatVersion) {
    throw SchemaError("unsupported sequence format_version");
  }
  SequenceRecord record;
  auto& seq = record.sequence;
  if (line.contains("fault") && !line.at("fault").is_null()) {
    if (!line.at("fault").is_number_unsigned()) {
      throw SchemaError("field 'fault' must be a non-negative integer or null");
    }
    seq.fault = line.at("fault").get<FaultIndex>();
  }
  for (const json& s : line.at("symbols")) {
    if (!s.is_number_unsigned()) throw SchemaError("symbols must be non-negative integers");
    seq.symbols.push_back(s.get<Symbol>());
  }
  for (const json& t : line.at("times")) {
    if (!t.is_number()) throw SchemaError("times must be numbers");
    seq.activation_times.push_back(t.get<double>());
  }
  if (line.contains("meta")) record.meta = line.at("meta");
  try {
    seq.validate();
  } catch (const DomainError& e) {
    throw SchemaError(e.what());
  }
  return record;
}

std::vector<SequenceRecord> read_sequences_jsonl(std::istream& in) {
  std::vector<SequenceRecord> out;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(text)));
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SequenceRecord> read_sequences_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_sequences_jsonl(in);
}

void write_sequences_jsonl(std::ostream& out, const std::vector<SequenceRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void write_sequences_jsonl(const std::filesystem::path& path,
                           const std::vector<SequenceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_sequences_jsonl(out, records);
}

}  // namespace alarmhmm
