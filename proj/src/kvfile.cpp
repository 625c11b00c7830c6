#include "coldbox/kvfile.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coldbox/errors.hpp"

namespace coldbox {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

KvMap read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open key-value file: " + path);
    KvMap kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected `key = value`, got: " + line);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": empty key or value");
        }
        kv[key] = value;
    }
    return kv;
}

void write_kv_file(const KvMap& kv, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write key-value file: " + path);
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

bool kv_has(const KvMap& kv, const std::string& key) { return kv.count(key) != 0; }

std::string kv_get_string(const KvMap& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError("missing key: " + key);
    return it->second;
}

double kv_get_double(const KvMap& kv, const std::string& key) {
    const std::string raw = kv_get_string(kv, key);
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0') {
        throw ValidationError("key " + key + " is not a number: " + raw);
    }
    return v;
}

double kv_get_double_or(const KvMap& kv, const std::string& key, double fallback) {
    return kv_has(kv, key) ? kv_get_double(kv, key) : fallback;
}

} // namespace coldbox
