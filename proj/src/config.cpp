#include "fenceguide/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fenceguide {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec))
        raise(ErrorKind::FileMissing, "no such config file: " + path);
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

KeyValueFile KeyValueFile::parse_text(const std::string& text, const std::string& origin) {
    KeyValueFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorKind::FileMalformed,
                  origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            raise(ErrorKind::FileMalformed,
                  origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.values_.count(key))
            raise(ErrorKind::FileMalformed,
                  origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_[key] = true;
    return it->second;
}

int KeyValueFile::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_[key] = true;
    char* end = nullptr;
    long v = std::strtol(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        raise(ErrorKind::InvalidArgument, origin_ + ": key '" + key + "' is not an integer");
    return static_cast<int>(v);
}

std::uint64_t KeyValueFile::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_[key] = true;
    char* end = nullptr;
    unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        raise(ErrorKind::InvalidArgument, origin_ + ": key '" + key + "' is not an integer");
    return static_cast<std::uint64_t>(v);
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_[key] = true;
    char* end = nullptr;
    double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        raise(ErrorKind::InvalidArgument, origin_ + ": key '" + key + "' is not a number");
    return v;
}

void KeyValueFile::reject_unknown_keys() const {
    for (const auto& [key, value] : values_) {
        if (!consumed_.count(key))
            raise(ErrorKind::InvalidArgument, origin_ + ": unknown key '" + key + "'");
    }
}

} // namespace fenceguide
