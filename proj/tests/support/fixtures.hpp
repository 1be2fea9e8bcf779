#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "metakg/eval.hpp"
#include "metakg/taxonomy.hpp"

namespace fixtures {

using metakg::kAllMetaphorTypes;
using metakg::MetaphorType;

/// Human upper-bound scores per type, in column order.
inline constexpr std::array<double, 8> kHumanTypeScores = {87.8, 87.5, 89.1, 83.8, 72.0, 81.5, 78.1, 78.0};
/// Published "Average" for the same row.
inline constexpr double kHumanReportedAverage = 83.4;
/// Benchmark samples per type, in column order (sums to 860).
inline constexpr std::array<std::size_t, 8> kBenchmarkTypeCounts = {136, 150, 62, 113, 54, 171, 112, 62};

/// Deficiency counts per 1000 annotations (wrong, missing, superficial, improper).
inline constexpr std::array<std::size_t, 4> kDeficiencyRowA = {107, 279, 337, 277};
inline constexpr std::array<std::size_t, 4> kDeficiencyRowB = {135, 281, 283, 301};

/// `n` raw 0..10 scores whose scaled (x10) mean is exactly `scaled_mean`
/// when scaled_mean * n / 10 is an integer.
inline std::vector<int> raw_scores_with_mean(double scaled_mean, std::size_t n) {
    const auto total = static_cast<long long>(std::llround(scaled_mean * static_cast<double>(n) / 10.0));
    const long long base = total / static_cast<long long>(n);
    const long long extra = total % static_cast<long long>(n);
    std::vector<int> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<int>(base + (static_cast<long long>(i) < extra)));
    return out;
}

inline std::string item_id(MetaphorType t, std::size_t i) {
    return std::string(metakg::metaphor_type_id(t)) + "-" + std::to_string(i);
}

/// Records with `counts[k]` items of type k.
inline std::vector<metakg::BenchmarkRecord> records_with_counts(const std::array<std::size_t, 8>& counts) {
    std::vector<metakg::BenchmarkRecord> out;
    for (std::size_t k = 0; k < 8; ++k) {
        for (std::size_t i = 0; i < counts[k]; ++i) {
            metakg::BenchmarkRecord r;
            r.item_id = item_id(kAllMetaphorTypes[k], i);
            r.title = "clip " + r.item_id;
            r.metaphor_type = kAllMetaphorTypes[k];
            r.golden_interpretation = "the " + std::string(metakg::metaphor_type_id(kAllMetaphorTypes[k])) +
                                      " element conveys meaning " + std::to_string(i);
            out.push_back(std::move(r));
        }
    }
    return out;
}

/// 100 verdicts per type whose per-type means equal kHumanTypeScores.
inline std::vector<metakg::JudgeVerdict> human_row_verdicts() {
    std::vector<metakg::JudgeVerdict> out;
    for (std::size_t k = 0; k < 8; ++k) {
        auto raws = raw_scores_with_mean(kHumanTypeScores[k], 100);
        for (std::size_t i = 0; i < raws.size(); ++i) {
            out.push_back(*metakg::make_verdict(item_id(kAllMetaphorTypes[k], i), raws[i], "", "human"));
        }
    }
    return out;
}

}  // namespace fixtures
