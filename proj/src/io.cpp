#include "cavsim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cavsim/stats.hpp"

namespace cavsim {

namespace {

constexpr char magic[4] = {'C', 'A', 'V', 'C'};
constexpr std::uint16_t schema_version = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = char((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void put_u16(std::ostream& os, std::uint16_t v) {
    char b[2] = {char(v & 0xff), char((v >> 8) & 0xff)};
    os.write(b, 2);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
}

std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return std::uint16_t(b[0] | (b[1] << 8));
}

std::uint64_t to_ps(double t_s) { return std::uint64_t(std::llround(t_s * 1e12)); }

ClickFile read_clicks_binary(std::ifstream& f, const std::string& path) {
    char m[4];
    f.read(m, 4);
    ClickFile out;
    out.version = get_u16(f);
    if (out.version != schema_version)
        throw ConfigError(path + ": unsupported click schema version " +
                          std::to_string(out.version));
    out.config_hash = get_u64(f);
    std::uint64_t count = get_u64(f);
    out.clicks.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        ClickRecord c;
        std::uint64_t t_ps = get_u64(f);
        c.detector = std::uint8_t(f.get());
        c.pulse_index = get_u32(f);
        c.shot_index = get_u32(f);
        c.flags = std::uint8_t(f.get());
        if (!f) throw ConfigError(path + ": truncated click file");
        c.t = double(t_ps) * 1e-12;
        out.clicks.push_back(c);
    }
    return out;
}

ClickFile read_clicks_text(const std::string& path) {
    std::ifstream f(path);
    ClickFile out;
    bool saw_header = false;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("schema=", 0) == 0) {
                    out.version = std::uint16_t(std::stoul(tok.substr(7)));
                    saw_header = true;
                } else if (tok.rfind("config=", 0) == 0) {
                    out.config_hash = std::stoull(tok.substr(7), nullptr, 0);
                }
            }
            continue;
        }
        std::istringstream ls(line);
        std::uint64_t t_ps;
        unsigned det, pulse, shot, flags;
        if (!(ls >> t_ps >> det >> pulse >> shot >> flags))
            throw ConfigError(path + ": malformed click row: " + line);
        ClickRecord c;
        c.t = double(t_ps) * 1e-12;
        c.detector = std::uint8_t(det);
        c.pulse_index = std::uint32_t(pulse);
        c.shot_index = std::uint32_t(shot);
        c.flags = std::uint8_t(flags);
        out.clicks.push_back(c);
    }
    if (!saw_header) throw ConfigError(path + ": missing schema header");
    if (out.version != schema_version)
        throw ConfigError(path + ": unsupported click schema version " +
                          std::to_string(out.version));
    return out;
}

}  // namespace

FileFormat parse_file_format(const std::string& s) {
    if (s == "text") return FileFormat::text;
    if (s == "binary") return FileFormat::binary;
    throw ConfigError("unknown file format '" + s + "' (expected text or binary)");
}

void write_clicks(const std::string& path, const std::vector<ClickRecord>& clicks,
                  std::uint64_t config_hash, FileFormat format) {
    if (format == FileFormat::binary) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot open " + path + " for writing");
        f.write(magic, 4);
        put_u16(f, schema_version);
        put_u64(f, config_hash);
        put_u64(f, clicks.size());
        for (const auto& c : clicks) {
            put_u64(f, to_ps(c.t));
            f.put(char(c.detector));
            put_u32(f, c.pulse_index);
            put_u32(f, c.shot_index);
            f.put(char(c.flags));
        }
        if (!f) throw ConfigError("write failed: " + path);
        return;
    }
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    char head[96];
    std::snprintf(head, sizeof head, "# cavsim clicks schema=%u config=0x%016llx\n",
                  unsigned(schema_version), (unsigned long long)config_hash);
    f << head << "# t_ps detector pulse shot flags\n";
    for (const auto& c : clicks)
        f << to_ps(c.t) << ' ' << unsigned(c.detector) << ' ' << c.pulse_index << ' '
          << c.shot_index << ' ' << unsigned(c.flags) << '\n';
    if (!f) throw ConfigError("write failed: " + path);
}

ClickFile read_clicks(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    char m[4] = {0, 0, 0, 0};
    f.read(m, 4);
    f.seekg(0);
    if (m[0] == magic[0] && m[1] == magic[1] && m[2] == magic[2] && m[3] == magic[3])
        return read_clicks_binary(f, path);
    f.close();
    return read_clicks_text(path);
}

void write_table(const std::string& path, const Table& table, std::uint64_t config_hash) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    char head[128];
    std::snprintf(head, sizeof head, "# cavsim table schema=%u config=0x%016llx kind=%s\n",
                  unsigned(schema_version), (unsigned long long)config_hash,
                  table.kind.c_str());
    f << head;
    for (const auto& n : table.notes) f << "# " << n << '\n';
    f << '#';
    for (const auto& c : table.columns) f << ' ' << c;
    f << '\n';
    if (!table.row_labels.empty() && table.row_labels.size() != table.rows.size())
        throw ConfigError("write_table: row_labels/rows size mismatch");
    char cell[40];
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        bool lead = true;
        if (!table.row_labels.empty()) {
            f << table.row_labels[r];
            lead = false;
        }
        for (double v : table.rows[r]) {
            std::snprintf(cell, sizeof cell, "%.9g", v);
            f << (lead ? "" : " ") << cell;
            lead = false;
        }
        f << '\n';
    }
    if (!f) throw ConfigError("write failed: " + path);
}

}  // namespace cavsim
