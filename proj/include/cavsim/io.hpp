#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cavsim/photostream.hpp"

namespace cavsim {

enum class FileFormat { text, binary };

FileFormat parse_file_format(const std::string& s);

// Click files carry a schema version and the hash of the config that produced
// them. Timestamps are stored as integer picoseconds in both formats, so a
// text/binary round trip is exact.
struct ClickFile {
    std::uint16_t version = 1;
    std::uint64_t config_hash = 0;
    std::vector<ClickRecord> clicks;
};

void write_clicks(const std::string& path, const std::vector<ClickRecord>& clicks,
                  std::uint64_t config_hash, FileFormat format);

// Auto-detects the format from the leading bytes.
ClickFile read_clicks(const std::string& path);

// Numeric table with a commented header; every analysis output goes through
// this so the schema/config stamp is never forgotten.
struct Table {
    std::string kind;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> row_labels;  // optional, one per row (summary records)
    std::vector<std::string> notes;       // extra "# key value" lines
};

void write_table(const std::string& path, const Table& table, std::uint64_t config_hash);

}  // namespace cavsim
