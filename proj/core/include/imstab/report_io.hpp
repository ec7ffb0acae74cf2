#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace imstab {

// Byte-deterministic JSON: keys sorted (nlohmann object order), floats in
// shortest round-trip form. Writes are atomic (temp file + rename).
void write_json_file(const nlohmann::json& j, const std::string& path);

// Appends one line to a CSV file with a single O_APPEND write so concurrent
// writers interleave whole rows. Creates the file with the header when absent.
void append_csv_row(const std::string& path, const std::string& header, const std::string& row);

void ensure_directory(const std::string& path);

}  // namespace imstab
