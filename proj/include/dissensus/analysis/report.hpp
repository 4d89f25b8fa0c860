#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dissensus::analysis {

enum class CheckStatus { Pass, Fail, Skipped };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "PASS";
        case CheckStatus::Fail: return "FAIL";
        case CheckStatus::Skipped: return "SKIP";
    }
    return "?";
}

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Skipped;
    std::int64_t evaluations = 0;
    std::optional<std::int64_t> tick;   // first violation
    std::optional<std::int64_t> epoch;  // first violation
    std::string witness;                // failure witness, skip reason or pass note
};

// One line per check. A check that was never evaluated is reported as
// skipped, never as passed.
struct InvariantReport {
    std::vector<CheckResult> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::Fail) return false;
        return true;
    }

    const CheckResult* first_failure() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::Fail) return &c;
        return nullptr;
    }

    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    void append(const InvariantReport& other) {
        checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    }

    std::string to_text() const {
        std::ostringstream os;
        for (const auto& c : checks) {
            os << to_string(c.status) << ' ' << c.name;
            if (c.status == CheckStatus::Pass)
                os << " (" << c.evaluations << (c.evaluations == 1 ? " evaluation)" : " evaluations)");
            if (c.tick) os << " tick=" << *c.tick;
            if (c.epoch) os << " epoch=" << *c.epoch;
            if (!c.witness.empty()) os << ": " << c.witness;
            os << '\n';
        }
        return os.str();
    }
};

// Accumulates evaluations for a fixed list of checks. Only the first
// violation of each check is kept; witnesses are built lazily.
class CheckBook {
public:
    std::size_t add(std::string name) {
        results_.push_back({std::move(name), CheckStatus::Skipped, 0, {}, {}, {}});
        return results_.size() - 1;
    }

    template <typename Witness>
    bool expect(std::size_t id, bool ok, std::optional<std::int64_t> tick, std::optional<std::int64_t> epoch, Witness&& witness) {
        auto& r = results_[id];
        ++r.evaluations;
        if (!ok && r.status != CheckStatus::Fail) {
            r.status = CheckStatus::Fail;
            r.tick = tick;
            r.epoch = epoch;
            r.witness = witness();
        }
        return ok;
    }

    bool expect(std::size_t id, bool ok, std::optional<std::int64_t> tick, std::optional<std::int64_t> epoch) {
        return expect(id, ok, tick, epoch, [] { return std::string(); });
    }

    void skip(std::size_t id, std::string reason) {
        if (results_[id].status != CheckStatus::Fail && results_[id].evaluations == 0) results_[id].witness = std::move(reason);
    }

    void note(std::size_t id, std::string text) {
        if (results_[id].status != CheckStatus::Fail) results_[id].witness = std::move(text);
    }

    InvariantReport finish() && {
        for (auto& r : results_) {
            if (r.status == CheckStatus::Fail) continue;
            if (r.evaluations > 0) r.status = CheckStatus::Pass;
            else if (r.witness.empty()) r.witness = "not exercised";
        }
        return {std::move(results_)};
    }

private:
    std::vector<CheckResult> results_;
};

}  // namespace dissensus::analysis
