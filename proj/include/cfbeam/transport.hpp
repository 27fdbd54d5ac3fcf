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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfbeam/types.hpp"

namespace cfbeam {

enum class Phase { training, online };

/// Exact counts of real numbers transferred per node, kept separately for
/// the training and online phases. Counts are integers so closed-form
/// overhead identities can be checked with integer equality.
class OverheadLedger {
  public:
    struct Counters {
        std::int64_t sent = 0;
        std::int64_t received = 0;
    };

    void record(const std::string& from, const std::string& to, std::int64_t reals,
                Phase phase = Phase::training) {
        if (reals < 0) throw std::invalid_argument("OverheadLedger: negative transfer");
        auto& m = (phase == Phase::training) ? training_ : online_;
        m[from].sent += reals;
        m[to].received += reals;
    }

    /// Broadcast from one node, counted once on the sender (the shared
    /// medium carries it once) and once per receiver.
    void record_broadcast(const std::string& from, const std::vector<std::string>& to,
                          std::int64_t reals, Phase phase = Phase::training) {
        auto& m = (phase == Phase::training) ? training_ : online_;
        m[from].sent += reals;
        for (const auto& t : to) m[t].received += reals;
    }

    Counters node(const std::string& id, Phase phase = Phase::training) const {
        const auto& m = (phase == Phase::training) ? training_ : online_;
        const auto it = m.find(id);
        return it == m.end() ? Counters{} : it->second;
    }

    std::int64_t total_sent(Phase phase = Phase::training) const {
        const auto& m = (phase == Phase::training) ? training_ : online_;
        std::int64_t t = 0;
        for (const auto& [id, c] : m) t += c.sent;
        return t;
    }

    void clear() {
        training_.clear();
        online_.clear();
    }

  private:
    std::map<std::string, Counters> training_;
    std::map<std::string, Counters> online_;
};

/// Fronthaul trace row, one per message.
struct FronthaulRecord {
    int round;
    std::string node;
    std::string direction;  // "uplink" or "downlink"
    std::int64_t reals;
    int sparsity_budget;  // 0 when the message is dense
};

inline void write_fronthaul_trace(const std::vector<FronthaulRecord>& records,
                                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_fronthaul_trace: cannot open " + path);
    out << "round,node,direction,reals,sparsity_budget\n";
    for (const auto& r : records)
        out << r.round << ',' << r.node << ',' << r.direction << ',' << r.reals << ','
            << r.sparsity_budget << '\n';
}

// ---- wire framing for the pluggable transport ------------------------------
// Length-prefixed little-endian records of (row, index, float64 value): a
// uint64 record count followed by (uint32 row, uint32 index, f64 value)
// triples. A socket transport can adopt this framing without touching the
// training math.

struct SparseEntry {
    std::uint32_t row;
    std::uint32_t index;
    double value;
};

inline std::vector<std::uint8_t> frame_records(const std::vector<SparseEntry>& entries) {
    std::vector<std::uint8_t> buf;
    buf.reserve(8 + entries.size() * 16);
    auto put = [&buf](const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    };
    const std::uint64_t count = entries.size();
    put(&count, 8);
    for (const auto& e : entries) {
        put(&e.row, 4);
        put(&e.index, 4);
        put(&e.value, 8);
    }
    return buf;
}

inline std::vector<SparseEntry> unframe_records(const std::vector<std::uint8_t>& buf) {
    if (buf.size() < 8) throw std::runtime_error("unframe_records: short buffer");
    std::uint64_t count;
    std::memcpy(&count, buf.data(), 8);
    if (buf.size() != 8 + count * 16)
        throw std::runtime_error("unframe_records: length prefix does not match payload");
    std::vector<SparseEntry> out(count);
    std::size_t off = 8;
    for (auto& e : out) {
        std::memcpy(&e.row, buf.data() + off, 4);
        std::memcpy(&e.index, buf.data() + off + 4, 4);
        std::memcpy(&e.value, buf.data() + off + 8, 8);
        off += 16;
    }
    return out;
}

}  // namespace cfbeam
