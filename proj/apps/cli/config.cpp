#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace cli {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// [first, last) of s without surrounding blanks.
std::pair<std::size_t, std::size_t> trimmed(const std::string& s, std::size_t first, std::size_t last) {
    while (first < last && is_space(s[first])) ++first;
    while (last > first && is_space(s[last - 1])) --last;
    return {first, last};
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    return std::all_of(k.begin(), k.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

double parse_double(const std::string& text, bool& ok) {
    double x = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    if (text == "inf" || text == "+inf") return ok = true, HUGE_VAL;
    if (!text.empty() && text[0] == '+') ++b;
    const auto r = std::from_chars(b, e, x);
    ok = r.ec == std::errc() && r.ptr == e && std::isfinite(x);
    return x;
}

}  // namespace

const Entry* Section::find(const std::string& key) const {
    for (const auto& e : entries)
        if (e.key == key) return &e;
    return nullptr;
}

void Section::set(const std::string& key, const std::string& value) {
    for (auto& e : entries)
        if (e.key == key) {
            e.value = value;
            return;
        }
    entries.push_back({key, value, 0, 0, 0});
}

const Section* ConfigFile::find(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

Section& ConfigFile::get_or_add(const std::string& name) {
    for (auto& s : sections)
        if (s.name == name) return s;
    sections.push_back({name, 0, {}});
    return sections.back();
}

const std::vector<std::string>& known_sections() {
    static const std::vector<std::string> names{"model",         "quadrature",    "simulation",   "product.european",
                                                "product.timer", "product.swap", "output",       "grid"};
    return names;
}

ConfigFile parse_config(std::istream& in) {
    ConfigFile cfg;
    std::string line;
    int lineno = 0;
    Section* current = nullptr;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);  // UTF-8 BOM
        auto [b, e] = trimmed(line, 0, line.size());
        if (b == e || line[b] == '#' || line[b] == ';') continue;
        const int col = static_cast<int>(b) + 1;
        if (line[b] == '[') {
            if (line[e - 1] != ']') throw ConfigError("section header is missing ']'", lineno, col);
            auto [nb, ne] = trimmed(line, b + 1, e - 1);
            const std::string name = line.substr(nb, ne - nb);
            const auto& known = known_sections();
            if (std::find(known.begin(), known.end(), name) == known.end())
                throw ConfigError("unknown section [" + name + "]", lineno, static_cast<int>(nb) + 1);
            if (cfg.find(name)) throw ConfigError("duplicate section [" + name + "]", lineno, col);
            cfg.sections.push_back({name, lineno, {}});
            current = &cfg.sections.back();
            continue;
        }
        const std::size_t eq = line.find('=', b);
        if (eq == std::string::npos || eq >= e)
            throw ConfigError("expected 'key = value', got '" + line.substr(b, e - b) + "'", lineno, col);
        auto [kb, ke] = trimmed(line, b, eq);
        auto [vb, ve] = trimmed(line, eq + 1, e);
        Entry entry{line.substr(kb, ke - kb), line.substr(vb, ve - vb), lineno, static_cast<int>(kb) + 1,
                    static_cast<int>(vb) + 1};
        if (!valid_key(entry.key)) throw ConfigError("malformed key '" + entry.key + "'", lineno, entry.key_column);
        if (!current) throw ConfigError("key '" + entry.key + "' outside any section", lineno, entry.key_column);
        if (current->find(entry.key))
            throw ConfigError("duplicate key '" + entry.key + "' in [" + current->name + "]", lineno, entry.key_column);
        if (entry.value.empty())
            throw ConfigError("key '" + entry.key + "' has no value", lineno, static_cast<int>(eq) + 2);
        current->entries.push_back(std::move(entry));
    }
    return cfg;
}

ConfigFile load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_config(in);
}

double to_double(const Entry& e) {
    bool ok = false;
    const double x = parse_double(e.value, ok);
    if (!ok) throw ConfigError("'" + e.key + "' needs a number, got '" + e.value + "'", e.line, e.value_column);
    return x;
}

long long to_integer(const Entry& e) {
    long long x = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto r = std::from_chars(b, end, x);
    if (r.ec != std::errc() || r.ptr != end)
        throw ConfigError("'" + e.key + "' needs an integer, got '" + e.value + "'", e.line, e.value_column);
    return x;
}

std::vector<double> to_list(const Entry& e) {
    try {
        return parse_range(e.value);
    } catch (const ConfigError& err) {
        throw ConfigError("'" + e.key + "': " + err.what(), e.line, e.value_column);
    }
}

std::vector<double> parse_range(const std::string& text) {
    auto number = [](const std::string& s) {
        auto [b, e] = trimmed(s, 0, s.size());
        bool ok = false;
        const double x = parse_double(s.substr(b, e - b), ok);
        if (!ok) throw ConfigError("bad number '" + s + "'");
        return x;
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto c1 = text.find(':');
        const auto c2 = text.find(':', c1 + 1);
        if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos)
            throw ConfigError("range must be start:end:count, got '" + text + "'");
        const double a = number(text.substr(0, c1));
        const double b = number(text.substr(c1 + 1, c2 - c1 - 1));
        const double n = number(text.substr(c2 + 1));
        if (n < 1 || n != std::floor(n) || n > 1e7) throw ConfigError("range count must be a positive integer");
        const long count = static_cast<long>(n);
        for (long k = 0; k < count; ++k) {
            double x = count == 1 ? a : (k + 1 == count ? b : a + (b - a) * static_cast<double>(k) / (count - 1));
            // Snap 0.15000000000000002 back to 0.15 so CSV keys stay readable.
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.15g", x);
            out.push_back(std::strtod(buf, nullptr));
        }
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(number(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

}  // namespace cli
