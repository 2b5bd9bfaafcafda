#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "alarmhmm/hmm.hpp"

namespace alarmhmm {

inline constexpr const char* kModelFormatVersion = "1";

// {format_version, n_states, n_symbols, transition, emission, initial};
// matrices are arrays of rows.
nlohmann::json hmm_to_json(const Hmm& model);

// Throws SchemaError on missing or mistyped fields and InvalidModelError when
// the probabilities violate the model invariants.
Hmm hmm_from_json(const nlohmann::json& doc);

// Shortest round-trip representation of every double, two-space indent,
// trailing newline.
std::string dump_json(const nlohmann::json& doc);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace alarmhmm
