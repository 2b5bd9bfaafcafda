#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "alarmhmm/alarm.hpp"

namespace alarmhmm {

inline constexpr const char* kSequenceFormatVersion = "1";

// One line of an alarm-sequence JSONL file:
// {"fault": <int|null>, "format_version": "1", "symbols": [...], "times": [...], "meta": {...}}
// format_version may be omitted on input.
struct SequenceRecord {
  AlarmSequence sequence;
  nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json record_to_json(const SequenceRecord& record);
SequenceRecord record_from_json(const nlohmann::json& line);

// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<SequenceRecord> read_sequences_jsonl(std::istream& in);
std::vector<SequenceRecord> read_sequences_jsonl(const std::filesystem::path& path);
void write_sequences_jsonl(std::ostream& out, const std::vector<SequenceRecord>& records);
void write_sequences_jsonl(const std::filesystem::path& path,
                           const std::vector<SequenceRecord>& records);

}  // namespace alarmhmm
