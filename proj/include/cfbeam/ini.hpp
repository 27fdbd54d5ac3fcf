// SPDX-License-Identifier: Apache-2.0
//
// cfbeam: probing-beam beam alignment workbench for mmWave cell-free MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfbeam {

/// Minimal INI reader: [section] headers, key = value lines, # and ;
/// comments. Keys keep their line number for diagnostics; consumers flag
/// any key that was never read.
class IniDoc {
  public:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool consumed = false;
    };

    static IniDoc parse(const std::string& text, const std::string& origin = "<string>") {
        IniDoc doc;
        doc.origin_ = origin;
        std::istringstream in(text);
        std::string line, section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    doc.fail(line_no, "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) doc.fail(line_no, "empty section name");
                doc.sections_[section];  // materialize even if empty
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) doc.fail(line_no, "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            if (key.empty()) doc.fail(line_no, "empty key");
            if (section.empty()) doc.fail(line_no, "key outside any [section]");
            auto& entries = doc.sections_[section];
            if (entries.count(key))
                doc.fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
            entries[key] = {trim(line.substr(eq + 1)), line_no, false};
        }
        return doc;
    }

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return fallback;
        const auto e = s->second.find(key);
        if (e == s->second.end()) return fallback;
        e->second.consumed = true;
        return e->second.value;
    }

    double get_double(const std::string& section, const std::string& key,
                      double fallback) const {
        if (!has(section, key)) return fallback;
        const auto& e = entry(section, key);
        try {
            std::size_t used = 0;
            const double v = std::stod(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            fail(e.line, "[" + section + "]." + key + ": expected a number, got '" + e.value + "'");
        }
        return fallback;
    }

    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const {
        if (!has(section, key)) return fallback;
        const auto& e = entry(section, key);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            fail(e.line,
                 "[" + section + "]." + key + ": expected an integer, got '" + e.value + "'");
        }
        return fallback;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const auto& e = entry(section, key);
        if (e.value == "true" || e.value == "1") return true;
        if (e.value == "false" || e.value == "0") return false;
        fail(e.line, "[" + section + "]." + key + ": expected true/false, got '" + e.value + "'");
        return fallback;
    }

    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    const std::vector<double>& fallback) const {
        if (!has(section, key)) return fallback;
        const auto& e = entry(section, key);
        std::istringstream ss(e.value);
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) {
            try {
                out.push_back(std::stod(tok));
            } catch (...) {
                fail(e.line, "[" + section + "]." + key + ": bad number '" + tok + "'");
            }
        }
        return out;
    }

    std::vector<std::string> get_words(const std::string& section, const std::string& key,
                                       const std::vector<std::string>& fallback) const {
        if (!has(section, key)) return fallback;
        const auto& e = entry(section, key);
        std::istringstream ss(e.value);
        std::vector<std::string> out;
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        return out;
    }

    /// Error out on any key that no consumer asked for.
    void reject_unconsumed(const std::vector<std::string>& known_sections) const {
        for (const auto& [section, entries] : sections_) {
            bool known = false;
            for (const auto& s : known_sections)
                if (s == section) known = true;
            if (!known)
                fail(0, "unknown section [" + section + "]");
            for (const auto& [key, e] : entries)
                if (!e.consumed)
                    fail(e.line, "unknown key '" + key + "' in [" + section + "]");
        }
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw std::runtime_error(origin_ + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
                                 msg);
    }

  private:
    const Entry& entry(const std::string& section, const std::string& key) const {
        const Entry& e = sections_.at(section).at(key);
        e.consumed = true;
        return e;
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::string origin_;
};

}  // namespace cfbeam
